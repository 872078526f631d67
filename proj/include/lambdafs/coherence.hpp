#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lambdafs/faas_platform.hpp"
#include "lambdafs/sim_kernel.hpp"
#include "lambdafs/trace.hpp"

namespace lfs::coherence {

using faas::InstanceId;

struct Invalidation {
  enum class Kind : std::uint8_t { kPoint, kPrefix };
  Kind kind = Kind::kPoint;
  std::uint64_t round = 0;
  InstanceId issuer = faas::kNoInstance;
  // Point: every invalidated path. Prefix: a single subtree root.
  std::vector<std::string> paths;
};

struct CoordinatorConfig {
  sim::Duration round_timeout = sim::sec(10);
};

/// Liveness tracking plus INV/ACK delivery. Each INV and each ACK is one
/// message leg costing half a store round trip.
class Coordinator {
 public:
  using InvHandler = std::function<void(const Invalidation&)>;
  using Done = std::function<void(bool ok)>;

  Coordinator(sim::Simulator& sim, sim::LatencyModel latency, std::uint64_t seed, CoordinatorConfig cfg = {});

  void join(InstanceId id, int deployment, InvHandler on_inv);
  void leave(InstanceId id);
  bool is_live(InstanceId id) const { return members_.count(id) != 0; }
  std::vector<InstanceId> live(int deployment) const;

  /// Opens a round: every live instance of `targets` other than the leader
  /// receives `inv` and must ACK before `done(true)`. A leader that leaves
  /// abandons the round without calling `done`; a timeout calls `done(false)`.
  std::uint64_t run_round(InstanceId leader, const std::set<int>& targets, Invalidation inv,
                          const std::string& request_id, Done done);

  std::size_t open_rounds() const { return rounds_.size(); }

  struct Stats {
    std::uint64_t rounds = 0;
    std::uint64_t inv_messages = 0;
    std::uint64_t ack_messages = 0;
    std::uint64_t timeouts = 0;
    std::uint64_t abandoned = 0;
    std::uint64_t joins = 0;
    std::uint64_t leaves = 0;
  };
  const Stats& stats() const { return stats_; }

  void set_trace(trace::ProtocolTrace* t) { trace_ = t; }

 private:
  struct Member {
    int deployment;
    InvHandler on_inv;
  };
  struct Round {
    InstanceId leader;
    std::set<InstanceId> pending;
    Done done;
    sim::EventHandle timer;
  };

  sim::Duration leg();
  void deliver(std::uint64_t round, InstanceId to, const Invalidation& inv);
  void on_ack(std::uint64_t round, InstanceId from);
  void maybe_complete(std::uint64_t round);
  void emit(trace::TraceEvent e);

  sim::Simulator& sim_;
  sim::LatencyModel latency_;
  sim::Rng rng_;
  CoordinatorConfig cfg_;
  std::map<InstanceId, Member> members_;
  std::map<std::uint64_t, Round> rounds_;
  std::uint64_t next_round_ = 1;
  trace::ProtocolTrace* trace_ = nullptr;
  Stats stats_;
};

/// Splits `count` sub-operations into [begin, end) batches of `batch_size`.
std::vector<std::pair<std::size_t, std::size_t>> make_batches(std::size_t count, std::size_t batch_size);

/// Round-robin helper deployment order starting after the leader's deployment.
std::vector<int> helper_deployment_order(int leader_deployment, int n_deployments);

}  // namespace lfs::coherence
