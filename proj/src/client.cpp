#include "lambdafs/client.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lambdafs/partitioning.hpp"

namespace lfs::client {

void ClientConfig::validate() const {
  if (http_probability < 0.0 || http_probability > 1.0) throw std::invalid_argument("http_probability must be in [0, 1]");
  if (straggler_factor <= 0.0) throw std::invalid_argument("straggler factor must be positive");
  if (latency_window < 1) throw std::invalid_argument("latency window must be >= 1");
  if (anti_thrash_threshold <= 1.0) throw std::invalid_argument("anti-thrash threshold must be > 1");
  if (backoff.base <= 0 || backoff.cap < backoff.base || backoff.max_attempts < 1) {
    throw std::invalid_argument("invalid backoff configuration");
  }
  if (tcp_timeout <= 0 || http_timeout <= 0) throw std::invalid_argument("timeouts must be positive");
}

std::string_view to_string(Channel c) { return c == Channel::kTcp ? "tcp" : "http"; }

ConnectionTable::ConnectionTable(int n_vms, int servers_per_vm, int n_deployments)
    : servers_per_vm_(servers_per_vm), n_deployments_(n_deployments) {
  if (n_vms < 1 || servers_per_vm < 1 || n_deployments < 1) throw std::invalid_argument("invalid connection table shape");
  servers_.resize(static_cast<std::size_t>(n_vms) * static_cast<std::size_t>(servers_per_vm));
  for (auto& s : servers_) s.by_deployment.resize(static_cast<std::size_t>(n_deployments));
}

void ConnectionTable::connect(int server, InstanceId inst, int deployment) {
  auto& list = servers_.at(static_cast<std::size_t>(server)).by_deployment.at(static_cast<std::size_t>(deployment));
  if (std::find(list.begin(), list.end(), inst) != list.end()) return;
  list.push_back(inst);
  held_[inst].emplace_back(server, deployment);
  ++total_;
}

void ConnectionTable::drop(InstanceId inst) {
  auto it = held_.find(inst);
  if (it == held_.end()) return;
  for (auto [server, dep] : it->second) {
    auto& list = servers_[static_cast<std::size_t>(server)].by_deployment[static_cast<std::size_t>(dep)];
    list.erase(std::remove(list.begin(), list.end(), inst), list.end());
    --total_;
  }
  held_.erase(it);
}

std::optional<InstanceId> ConnectionTable::pick(int server, int deployment, sim::Rng& rng) const {
  const auto& list = servers_[static_cast<std::size_t>(server)].by_deployment[static_cast<std::size_t>(deployment)];
  if (list.empty()) return std::nullopt;
  return list[rng.index(list.size())];
}

std::optional<InstanceId> ConnectionTable::pick_sibling(int server, int deployment, sim::Rng& rng) const {
  int vm = vm_of(server);
  std::vector<InstanceId> cands;
  for (int slot = 0; slot < servers_per_vm_; ++slot) {
    int s = server_for(vm, slot);
    if (s == server) continue;
    const auto& list = servers_[static_cast<std::size_t>(s)].by_deployment[static_cast<std::size_t>(deployment)];
    cands.insert(cands.end(), list.begin(), list.end());
  }
  if (cands.empty()) return std::nullopt;
  return cands[rng.index(cands.size())];
}

std::optional<InstanceId> ConnectionTable::pick_any(int server, sim::Rng& rng) const {
  int vm = vm_of(server);
  std::vector<InstanceId> cands;
  for (int slot = 0; slot < servers_per_vm_; ++slot) {
    for (const auto& list : servers_[static_cast<std::size_t>(server_for(vm, slot))].by_deployment) {
      cands.insert(cands.end(), list.begin(), list.end());
    }
  }
  if (cands.empty()) return std::nullopt;
  return cands[rng.index(cands.size())];
}

ClientPool::ClientPool(sim::Simulator& sim, ClientConfig cfg, ConnectionTable& table, int n_deployments,
                       std::uint64_t seed, TcpSend tcp, HttpSend http)
    : sim_(sim),
      cfg_(cfg),
      table_(table),
      n_deployments_(n_deployments),
      seed_(seed),
      tcp_(std::move(tcp)),
      http_(std::move(http)) {
  cfg_.validate();
}

std::uint64_t ClientPool::add_client(int server) {
  Client c;
  c.id = clients_.size();
  c.server = server;
  c.rng = sim::Rng(sim::derive_seed(seed_, 4, c.id));
  c.window = rpc::LatencyWindow(cfg_.latency_window);
  c.mode = rpc::ModeTracker(cfg_.anti_thrash_threshold, cfg_.anti_thrash_enabled);
  clients_.push_back(std::move(c));
  return clients_.back().id;
}

bool ClientPool::busy(std::uint64_t client) const { return clients_.at(client).active; }

rpc::ClientMode ClientPool::mode(std::uint64_t client) const { return clients_.at(client).mode.mode(); }

std::string ClientPool::submit(std::uint64_t client, FsOp op, Done done) {
  Client& c = clients_.at(client);
  if (c.active) throw std::logic_error("client already has an operation in flight");
  c.active = true;
  ++c.op_seq;
  c.current = CompletedOp{};
  c.current.client = client;
  c.current.request_id = "c" + std::to_string(client) + "-" + std::to_string(c.next_seq++);
  c.current.op = std::move(op);
  c.current.invoke = sim_.now();
  c.done = std::move(done);
  std::string id = c.current.request_id;
  send_attempt(c, faas::kNoInstance);
  return id;
}

void ClientPool::cancel_timers(Client& c) {
  sim_.cancel(c.timeout);
  sim_.cancel(c.straggler);
  sim_.cancel(c.backoff);
  c.timeout = {};
  c.straggler = {};
  c.backoff = {};
}

void ClientPool::send_attempt(Client& c, InstanceId avoid) {
  if (c.current.attempts >= cfg_.backoff.max_attempts) {
    ++stats_.give_ups;
    OpResult r;
    r.status = FsStatus::kGiveUp;
    finish(c, r);
    return;
  }
  ++c.current.attempts;
  ++c.epoch;
  const FsOp& op = c.current.op;
  const bool anti_thrash = c.mode.mode() == rpc::ClientMode::kAntiThrash;
  int dep = part::deployment_for(op.path, n_deployments_);
  std::optional<InstanceId> inst;
  for (int tries = 0; tries < 4 && (!inst || *inst == avoid); ++tries) inst = table_.pick(c.server, dep, c.rng);
  if (inst && *inst == avoid) inst.reset();
  if (!inst) inst = table_.pick_sibling(c.server, dep, c.rng);
  if (inst && *inst == avoid) inst.reset();
  if (!inst && anti_thrash) {
    inst = table_.pick_any(c.server, c.rng);
    if (inst) ++stats_.foreign_routes;
  }
  bool http = !inst;
  if (http) {
    ++stats_.no_connection;
  } else if (!anti_thrash && c.rng.bernoulli(cfg_.http_probability)) {
    http = true;
    ++stats_.http_replacements;
  }
  c.current.via = http ? Channel::kHttp : Channel::kTcp;
  c.target = http ? faas::kNoInstance : *inst;
  ++(http ? stats_.http_requests : stats_.tcp_requests);
  if (on_request) on_request(sim_.now(), c.current.via);

  nn::RpcRequest req{c.current.request_id, c.id, op};
  std::uint64_t id = c.id;
  std::uint64_t seq = c.op_seq;
  int epoch = c.epoch;
  if (http) {
    int server = c.server;
    http_(dep, req, [this, id, seq, epoch, server](OpResult r, InstanceId served, int served_dep, sim::Duration wait) {
      table_.connect(server, served, served_dep);
      Client& cl = clients_[id];
      if (cl.active && cl.op_seq == seq) cl.current.gateway_wait = wait;
      on_reply(id, seq, epoch, std::move(r));
    });
  } else {
    tcp_(*inst, req, [this, id, seq, epoch](OpResult r) { on_reply(id, seq, epoch, std::move(r)); });
  }
  sim::Duration limit = http ? cfg_.http_timeout : cfg_.tcp_timeout;
  c.timeout = sim_.schedule(limit, sim::EventKind::kTimeout, [this, id, seq, epoch] {
    ++stats_.timeouts;
    on_failure(id, seq, epoch);
  });
  if (!http) arm_straggler(c);
}

void ClientPool::arm_straggler(Client& c) {
  if (!cfg_.straggler_enabled || c.window.empty()) return;
  OpKind k = c.current.op.kind;
  if (k == OpKind::kMv || k == OpKind::kDelete) return;
  auto threshold = static_cast<sim::Duration>(std::ceil(cfg_.straggler_factor * c.window.average()));
  std::uint64_t id = c.id;
  std::uint64_t seq = c.op_seq;
  int epoch = c.epoch;
  c.straggler = sim_.schedule(std::max<sim::Duration>(1, threshold), sim::EventKind::kTimeout, [this, id, seq, epoch] {
    Client& cl = clients_[id];
    if (!cl.active || cl.op_seq != seq || cl.epoch != epoch) return;
    cl.straggler = {};
    if (cl.current.attempts >= cfg_.backoff.max_attempts) return;
    if (rpc::check_straggler(sim_.now() - cl.current.invoke, cl.window, cfg_.straggler_factor) !=
        rpc::StragglerDecision::kResubmit) {
      return;
    }
    ++stats_.straggler_resubmits;
    ++cl.current.resubmits;
    sim_.cancel(cl.timeout);
    cl.timeout = {};
    send_attempt(cl, cl.target);
  });
}

void ClientPool::on_reply(std::uint64_t client, std::uint64_t seq, int epoch, OpResult r) {
  Client& c = clients_[client];
  if (!c.active || c.op_seq != seq) return;
  if (is_final(r.status)) {
    finish(c, std::move(r));
    return;
  }
  on_failure(client, seq, epoch);
}

void ClientPool::on_failure(std::uint64_t client, std::uint64_t seq, int epoch) {
  Client& c = clients_[client];
  if (!c.active || c.op_seq != seq || c.epoch != epoch || c.backoff) return;
  sim_.cancel(c.timeout);
  sim_.cancel(c.straggler);
  c.timeout = {};
  c.straggler = {};
  ++stats_.retries;
  sim::Duration wait = rpc::next_backoff(c.current.attempts, cfg_.backoff, c.rng);
  c.backoff = sim_.schedule(wait, sim::EventKind::kInternal, [this, client, seq] {
    Client& cl = clients_[client];
    if (!cl.active || cl.op_seq != seq) return;
    cl.backoff = {};
    send_attempt(cl, faas::kNoInstance);
  });
}

void ClientPool::finish(Client& c, OpResult r) {
  cancel_timers(c);
  c.current.result = std::move(r);
  c.current.response = sim_.now();
  if (c.current.result.status != FsStatus::kGiveUp) {
    sim::Duration latency = c.current.response - c.current.invoke;
    std::uint64_t before = c.mode.entries();
    c.mode.update(latency, c.window);
    if (c.mode.entries() != before) ++stats_.anti_thrash_entries;
    c.window.add(latency);
  }
  c.active = false;
  CompletedOp out = std::move(c.current);
  Done done = std::move(c.done);
  c.done = nullptr;
  done(out);
}

}  // namespace lfs::client
