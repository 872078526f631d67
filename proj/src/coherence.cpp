#include "lambdafs/coherence.hpp"

#include <algorithm>
#include <stdexcept>

namespace lfs::coherence {

Coordinator::Coordinator(sim::Simulator& sim, sim::LatencyModel latency, std::uint64_t seed, CoordinatorConfig cfg)
    : sim_(sim), latency_(latency), rng_(seed), cfg_(cfg) {}

void Coordinator::join(InstanceId id, int deployment, InvHandler on_inv) {
  if (members_.count(id) != 0) throw std::logic_error("coordinator: duplicate join");
  members_.emplace(id, Member{deployment, std::move(on_inv)});
  ++stats_.joins;
}

void Coordinator::leave(InstanceId id) {
  if (members_.erase(id) == 0) return;
  ++stats_.leaves;
  std::vector<std::uint64_t> touched;
  for (auto& [rid, r] : rounds_) {
    if (r.leader == id || r.pending.erase(id) != 0) touched.push_back(rid);
  }
  for (std::uint64_t rid : touched) {
    auto it = rounds_.find(rid);
    if (it == rounds_.end()) continue;
    if (it->second.leader == id) {
      sim_.cancel(it->second.timer);
      rounds_.erase(it);
      ++stats_.abandoned;
      continue;
    }
    maybe_complete(rid);
  }
}

std::vector<InstanceId> Coordinator::live(int deployment) const {
  std::vector<InstanceId> out;
  for (const auto& [id, m] : members_) {
    if (m.deployment == deployment) out.push_back(id);
  }
  return out;
}

sim::Duration Coordinator::leg() {
  return std::max<sim::Duration>(1, latency_.sample(sim::LatencyKind::kStore, rng_) / 2);
}

void Coordinator::emit(trace::TraceEvent e) {
  if (trace_ != nullptr) trace_->add(std::move(e));
}

std::uint64_t Coordinator::run_round(InstanceId leader, const std::set<int>& targets, Invalidation inv,
                                     const std::string& request_id, Done done) {
  std::uint64_t rid = next_round_++;
  ++stats_.rounds;
  inv.round = rid;
  inv.issuer = leader;
  Round r;
  r.leader = leader;
  for (const auto& [id, m] : members_) {
    if (id != leader && targets.count(m.deployment) != 0) r.pending.insert(id);
  }
  trace::TraceEvent open;
  open.type = trace::EventType::kRoundOpen;
  open.t = sim_.now();
  open.round = rid;
  open.instance = leader;
  open.request_id = request_id;
  open.inv_kind = inv.kind == Invalidation::Kind::kPrefix ? "prefix" : "point";
  open.paths = inv.paths;
  open.targets.assign(targets.begin(), targets.end());
  open.required.assign(r.pending.begin(), r.pending.end());
  emit(std::move(open));

  std::vector<InstanceId> recipients(r.pending.begin(), r.pending.end());
  r.done = std::move(done);
  r.timer = sim_.schedule(cfg_.round_timeout, sim::EventKind::kTimeout, [this, rid] {
    auto it = rounds_.find(rid);
    if (it == rounds_.end()) return;
    Done d = std::move(it->second.done);
    rounds_.erase(it);
    ++stats_.timeouts;
    trace::TraceEvent fin;
    fin.type = trace::EventType::kRoundDone;
    fin.t = sim_.now();
    fin.round = rid;
    fin.ok = false;
    emit(std::move(fin));
    if (d) d(false);
  });
  rounds_.emplace(rid, std::move(r));
  for (InstanceId to : recipients) {
    ++stats_.inv_messages;
    sim_.schedule(leg(), sim::EventKind::kRpcArrival, [this, rid, to, inv] { deliver(rid, to, inv); });
  }
  maybe_complete(rid);
  return rid;
}

void Coordinator::deliver(std::uint64_t round, InstanceId to, const Invalidation& inv) {
  auto m = members_.find(to);
  if (m == members_.end()) return;
  trace::TraceEvent e;
  e.type = trace::EventType::kInv;
  e.t = sim_.now();
  e.round = round;
  e.instance = to;
  emit(std::move(e));
  if (m->second.on_inv) m->second.on_inv(inv);
  ++stats_.ack_messages;
  sim_.schedule(leg(), sim::EventKind::kRpcComplete, [this, round, to] { on_ack(round, to); });
}

void Coordinator::on_ack(std::uint64_t round, InstanceId from) {
  auto it = rounds_.find(round);
  if (it == rounds_.end()) return;
  if (it->second.pending.erase(from) == 0) return;
  trace::TraceEvent e;
  e.type = trace::EventType::kAck;
  e.t = sim_.now();
  e.round = round;
  e.instance = from;
  emit(std::move(e));
  maybe_complete(round);
}

void Coordinator::maybe_complete(std::uint64_t round) {
  auto it = rounds_.find(round);
  if (it == rounds_.end() || !it->second.pending.empty()) return;
  Done d = std::move(it->second.done);
  sim_.cancel(it->second.timer);
  rounds_.erase(it);
  trace::TraceEvent fin;
  fin.type = trace::EventType::kRoundDone;
  fin.t = sim_.now();
  fin.round = round;
  fin.ok = true;
  emit(std::move(fin));
  if (d) d(true);
}

std::vector<std::pair<std::size_t, std::size_t>> make_batches(std::size_t count, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t begin = 0; begin < count; begin += batch_size) {
    out.emplace_back(begin, std::min(count, begin + batch_size));
  }
  return out;
}

std::vector<int> helper_deployment_order(int leader_deployment, int n_deployments) {
  std::vector<int> out;
  for (int i = 1; i < n_deployments; ++i) out.push_back((leader_deployment + i) % n_deployments);
  return out;
}

}  // namespace lfs::coherence
