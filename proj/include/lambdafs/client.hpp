#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lambdafs/faas_platform.hpp"
#include "lambdafs/fs_types.hpp"
#include "lambdafs/namenode.hpp"
#include "lambdafs/rpc_policy.hpp"
#include "lambdafs/sim_kernel.hpp"

namespace lfs::client {

using faas::InstanceId;

struct ClientConfig {
  double http_probability = 0.01;
  bool straggler_enabled = true;
  double straggler_factor = 10.0;
  std::size_t latency_window = 100;
  bool anti_thrash_enabled = false;
  double anti_thrash_threshold = 2.5;
  rpc::BackoffConfig backoff;
  sim::Duration tcp_timeout = sim::sec(2);
  sim::Duration http_timeout = sim::sec(5);

  void validate() const;
};

enum class Channel : std::uint8_t { kTcp, kHttp };
std::string_view to_string(Channel c);

/// Client-side TCP servers and the NameNode connections each one holds.
class ConnectionTable {
 public:
  ConnectionTable(int n_vms, int servers_per_vm, int n_deployments);

  int servers() const { return static_cast<int>(servers_.size()); }
  int server_for(int vm, int slot) const { return vm * servers_per_vm_ + slot; }
  int vm_of(int server) const { return server / servers_per_vm_; }

  void connect(int server, InstanceId inst, int deployment);
  void drop(InstanceId inst);
  std::optional<InstanceId> pick(int server, int deployment, sim::Rng& rng) const;
  /// A connection to `deployment` held by another server on the same VM.
  std::optional<InstanceId> pick_sibling(int server, int deployment, sim::Rng& rng) const;
  /// Any connection on the VM regardless of deployment.
  std::optional<InstanceId> pick_any(int server, sim::Rng& rng) const;
  std::size_t connections() const { return total_; }

 private:
  struct Server {
    std::vector<std::vector<InstanceId>> by_deployment;
  };
  int servers_per_vm_;
  int n_deployments_;
  std::vector<Server> servers_;
  std::map<InstanceId, std::vector<std::pair<int, int>>> held_;  // instance -> (server, deployment)
  std::size_t total_ = 0;
};

struct CompletedOp {
  std::uint64_t client = 0;
  std::string request_id;
  FsOp op;
  OpResult result;
  sim::Time invoke = 0;
  sim::Time response = 0;
  int attempts = 0;
  int resubmits = 0;
  Channel via = Channel::kTcp;
  // Gateway queueing plus cold start of the last HTTP attempt that replied.
  sim::Duration gateway_wait = 0;
};

struct ClientStats {
  std::uint64_t tcp_requests = 0;
  std::uint64_t http_requests = 0;
  std::uint64_t http_replacements = 0;
  std::uint64_t no_connection = 0;
  std::uint64_t foreign_routes = 0;
  std::uint64_t retries = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t straggler_resubmits = 0;
  std::uint64_t give_ups = 0;
  std::uint64_t anti_thrash_entries = 0;
};

/// All simulated clients: channel selection with random HTTP replacement,
/// exponential backoff, straggler resubmission, timeouts and anti-thrash mode.
class ClientPool {
 public:
  using Reply = std::function<void(OpResult)>;
  using HttpReply = std::function<void(OpResult, InstanceId, int deployment, sim::Duration gateway_wait)>;
  /// Delivers a request over an existing connection; the reply may never come.
  using TcpSend = std::function<void(InstanceId, const nn::RpcRequest&, Reply)>;
  /// Invokes `deployment` through the HTTP gateway.
  using HttpSend = std::function<void(int deployment, const nn::RpcRequest&, HttpReply)>;
  using Done = std::function<void(const CompletedOp&)>;

  ClientPool(sim::Simulator& sim, ClientConfig cfg, ConnectionTable& table, int n_deployments, std::uint64_t seed,
             TcpSend tcp, HttpSend http);

  std::uint64_t add_client(int server);
  std::size_t size() const { return clients_.size(); }
  bool busy(std::uint64_t client) const;
  /// Issues `op` and returns its request id; each client runs one operation at a time.
  std::string submit(std::uint64_t client, FsOp op, Done done);

  const ClientStats& stats() const { return stats_; }
  rpc::ClientMode mode(std::uint64_t client) const;

  /// Called for every request sent, with its channel.
  std::function<void(sim::Time, Channel)> on_request;

 private:
  struct Client {
    std::uint64_t id = 0;
    int server = 0;
    sim::Rng rng{1};
    rpc::LatencyWindow window;
    rpc::ModeTracker mode;
    std::uint64_t next_seq = 1;
    // In-flight operation.
    bool active = false;
    std::uint64_t op_seq = 0;
    CompletedOp current;
    Done done;
    int epoch = 0;
    InstanceId target = faas::kNoInstance;
    sim::EventHandle timeout;
    sim::EventHandle straggler;
    sim::EventHandle backoff;
  };

  void send_attempt(Client& c, InstanceId avoid);
  void on_reply(std::uint64_t client, std::uint64_t seq, int epoch, OpResult r);
  void on_failure(std::uint64_t client, std::uint64_t seq, int epoch);
  void arm_straggler(Client& c);
  void finish(Client& c, OpResult r);
  void cancel_timers(Client& c);

  sim::Simulator& sim_;
  ClientConfig cfg_;
  ConnectionTable& table_;
  int n_deployments_;
  std::uint64_t seed_;
  TcpSend tcp_;
  HttpSend http_;
  std::vector<Client> clients_;
  ClientStats stats_;
};

}  // namespace lfs::client
