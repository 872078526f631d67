#include "lambdafs/faas_platform.hpp"

#include <cmath>
#include <algorithm>
#include <stdexcept>

namespace lfs::faas {

void PlatformConfig::validate() const {
  if (n_deployments < 1) throw std::invalid_argument("n_deployments must be >= 1");
  if (concurrency_level < 1) throw std::invalid_argument("concurrency_level must be >= 1");
  if (per_instance_vcpu <= 0.0) throw std::invalid_argument("per_instance_vcpu must be positive");
  if (vcpu_budget < per_instance_vcpu) throw std::invalid_argument("vcpu_budget must fit at least one instance");
  if (mem_gb < 0.0) throw std::invalid_argument("mem_gb must be >= 0");
  if (idle_timeout <= 0 || reclaim_tick <= 0) throw std::invalid_argument("idle timeouts must be positive");
  if (max_instances_per_deployment < 0) throw std::invalid_argument("max_instances_per_deployment must be >= 0");
}

int PlatformConfig::max_live_instances() const {
  return static_cast<int>(std::floor(vcpu_budget / per_instance_vcpu + 1e-9));
}

Platform::Platform(sim::Simulator& sim, PlatformConfig cfg, sim::LatencyModel latency, std::uint64_t seed)
    : sim_(sim), cfg_(cfg), latency_(latency), rng_(seed) {
  cfg_.validate();
  latency_.validate();
  queues_.resize(static_cast<std::size_t>(cfg_.n_deployments));
}

void Platform::start() {
  if (started_) return;
  started_ = true;
  sim_.schedule(cfg_.reclaim_tick, sim::EventKind::kInstanceReclaim, [this] { start_tick(); });
}

void Platform::start_tick() {
  reclaim_idle();
  sim_.schedule(cfg_.reclaim_tick, sim::EventKind::kInstanceReclaim, [this] { start_tick(); });
}

Instance* Platform::find(InstanceId id) {
  auto it = instances_.find(id);
  return it == instances_.end() ? nullptr : &it->second;
}

const Instance* Platform::instance(InstanceId id) const {
  auto it = instances_.find(id);
  return it == instances_.end() ? nullptr : &it->second;
}

bool Platform::is_live(InstanceId id) const {
  const Instance* inst = instance(id);
  return inst != nullptr && inst->state != InstanceState::kTerminated;
}

bool Platform::is_warm(InstanceId id) const {
  const Instance* inst = instance(id);
  return inst != nullptr && inst->state == InstanceState::kWarm;
}

double Platform::live_vcpu() const { return live_count_ * cfg_.per_instance_vcpu; }

bool Platform::can_cold_start(int deployment) const {
  if (cfg_.max_instances_per_deployment > 0 &&
      static_cast<int>(live_instances(deployment).size()) >= cfg_.max_instances_per_deployment) {
    return false;
  }
  return live_vcpu() + cfg_.per_instance_vcpu <= cfg_.vcpu_budget + 1e-9;
}

std::optional<InstanceId> Platform::cold_start(int deployment) {
  InstanceId id = next_id_++;
  Instance inst;
  inst.id = id;
  inst.deployment = deployment;
  inst.state = InstanceState::kColdStarting;
  inst.cores = std::max(1, static_cast<int>(std::floor(cfg_.per_instance_vcpu)));
  inst.started_at = sim_.now();
  inst.last_active = sim_.now();
  instances_.emplace(id, std::move(inst));
  ++live_count_;
  ++stats_.cold_starts;
  stats_.peak_vcpu = std::max(stats_.peak_vcpu, live_vcpu());
  for (auto& hook : on_cold_start) hook(instances_.at(id));
  sim::Duration delay = latency_.sample(sim::LatencyKind::kColdStart, rng_);
  sim_.schedule(delay, sim::EventKind::kColdStartDone, [this, id] {
    Instance* inst = find(id);
    if (inst == nullptr || inst->state != InstanceState::kColdStarting) return;
    inst->state = InstanceState::kWarm;
    inst->ready_at = sim_.now();
    inst->last_active = sim_.now();
    for (auto& hook : on_ready) hook(*inst);
    auto pending = std::move(inst->on_ready);
    inst->on_ready.clear();
    for (auto& fn : pending) {
      if (!is_live(id)) break;
      fn();
    }
  });
  return id;
}

bool Platform::evict_for(int deployment) {
  Instance* victim = nullptr;
  for (auto& [id, inst] : instances_) {
    if (inst.state != InstanceState::kWarm || inst.deployment == deployment) continue;
    if (victim == nullptr || inst.last_active < victim->last_active) victim = &inst;
  }
  if (victim == nullptr) return false;
  ++stats_.evictions;
  terminate(victim->id);
  return can_cold_start(deployment);
}

void Platform::when_ready(InstanceId id, std::function<void()> fn) {
  Instance* inst = find(id);
  if (inst == nullptr || inst->state == InstanceState::kTerminated) return;
  if (inst->state == InstanceState::kWarm) {
    fn();
  } else {
    inst->on_ready.push_back(std::move(fn));
  }
}

void Platform::assign(Instance& inst, StartFn fn) {
  ++inst.slots_used;
  InstanceId id = inst.id;
  when_ready(id, [fn = std::move(fn), id] { fn(id); });
}

namespace {
Instance* pick_packed(std::map<InstanceId, Instance>& instances, int deployment, int cl) {
  Instance* best = nullptr;
  for (auto& [id, inst] : instances) {
    if (inst.state == InstanceState::kTerminated || inst.deployment != deployment) continue;
    int free = cl - inst.slots_used;
    if (free <= 0) continue;
    if (best == nullptr || free < cl - best->slots_used) best = &inst;
  }
  return best;
}
}  // namespace

void Platform::route_http(int deployment, StartFn on_start) {
  if (deployment < 0 || deployment >= cfg_.n_deployments) throw std::out_of_range("route_http: bad deployment");
  ++stats_.http_invocations;
  auto& queue = queues_[static_cast<std::size_t>(deployment)];
  if (queue.empty()) {
    if (Instance* inst = pick_packed(instances_, deployment, cfg_.concurrency_level)) {
      assign(*inst, std::move(on_start));
      return;
    }
    if (can_cold_start(deployment) || (cfg_.evict_to_admit && evict_for(deployment))) {
      auto id = cold_start(deployment);
      assign(instances_.at(*id), std::move(on_start));
      return;
    }
  }
  ++stats_.queued_invocations;
  queue.push_back(std::move(on_start));
}

void Platform::release_slot(InstanceId id) {
  Instance* inst = find(id);
  if (inst == nullptr || inst->state == InstanceState::kTerminated) return;
  if (inst->slots_used > 0) --inst->slots_used;
  drain_queue(inst->deployment);
}

void Platform::drain_queue(int deployment) {
  auto& queue = queues_[static_cast<std::size_t>(deployment)];
  while (!queue.empty()) {
    Instance* inst = pick_packed(instances_, deployment, cfg_.concurrency_level);
    if (inst == nullptr) {
      if (!can_cold_start(deployment)) return;
      inst = &instances_.at(*cold_start(deployment));
    }
    StartFn fn = std::move(queue.front());
    queue.pop_front();
    assign(*inst, std::move(fn));
  }
}

void Platform::drain_all_queues() {
  for (int d = 0; d < cfg_.n_deployments; ++d) drain_queue(d);
}

std::optional<InstanceId> Platform::acquire_helper(int deployment) {
  const Instance* best = nullptr;
  for (const auto& [id, inst] : instances_) {
    if (inst.deployment != deployment || inst.state != InstanceState::kWarm) continue;
    if (best == nullptr || inst.active_requests < best->active_requests) best = &inst;
  }
  if (best != nullptr) return best->id;
  for (const auto& [id, inst] : instances_) {
    if (inst.deployment == deployment && inst.state == InstanceState::kColdStarting) return id;
  }
  if (can_cold_start(deployment)) return cold_start(deployment);
  return std::nullopt;
}

void Platform::begin_activity(InstanceId id) {
  Instance* inst = find(id);
  if (inst == nullptr || inst->state == InstanceState::kTerminated) return;
  if (inst->active_requests++ == 0) inst->busy_since = sim_.now();
  inst->last_active = sim_.now();
}

void Platform::end_activity(InstanceId id) {
  Instance* inst = find(id);
  if (inst == nullptr || inst->state == InstanceState::kTerminated || inst->active_requests == 0) return;
  ++inst->requests_served;
  if (--inst->active_requests == 0) inst->busy.push_back(BusyInterval{inst->busy_since, sim_.now()});
  inst->last_active = sim_.now();
}

void Platform::cpu(InstanceId id, sim::Duration cost, std::function<void()> done) {
  Instance* inst = find(id);
  if (inst == nullptr || inst->state == InstanceState::kTerminated) return;
  if (inst->cores_busy >= inst->cores) {
    inst->run_queue.emplace_back(cost, std::move(done));
    return;
  }
  ++inst->cores_busy;
  sim_.schedule(cost, sim::EventKind::kInternal, [this, id, done = std::move(done)] {
    finish_cpu(id);
    if (is_live(id)) done();
  });
}

void Platform::finish_cpu(InstanceId id) {
  Instance* inst = find(id);
  if (inst == nullptr || inst->state == InstanceState::kTerminated) return;
  --inst->cores_busy;
  if (inst->run_queue.empty()) return;
  auto [cost, fn] = std::move(inst->run_queue.front());
  inst->run_queue.pop_front();
  cpu(id, cost, std::move(fn));
}

void Platform::terminate(InstanceId id) {
  Instance* inst = find(id);
  if (inst == nullptr || inst->state == InstanceState::kTerminated) return;
  inst->state = InstanceState::kTerminated;
  inst->terminated_at = sim_.now();
  if (inst->active_requests > 0) inst->busy.push_back(BusyInterval{inst->busy_since, sim_.now()});
  inst->active_requests = 0;
  inst->slots_used = 0;
  inst->cores_busy = 0;
  inst->run_queue.clear();
  inst->on_ready.clear();
  --live_count_;
  ++stats_.terminations;
  const Instance snapshot = *inst;
  for (auto& hook : on_terminate) hook(snapshot);
  drain_all_queues();
}

void Platform::reclaim_idle() {
  std::vector<InstanceId> victims;
  for (const auto& [id, inst] : instances_) {
    if (inst.state != InstanceState::kWarm) continue;
    if (inst.active_requests > 0 || inst.slots_used > 0 || inst.cores_busy > 0) continue;
    if (sim_.now() - inst.last_active > cfg_.idle_timeout) victims.push_back(id);
  }
  for (InstanceId id : victims) {
    ++stats_.reclaimed;
    terminate(id);
  }
}

std::vector<InstanceId> Platform::live_instances(int deployment) const {
  std::vector<InstanceId> out;
  for (const auto& [id, inst] : instances_) {
    if (inst.deployment == deployment && inst.state != InstanceState::kTerminated) out.push_back(id);
  }
  return out;
}

std::vector<InstanceId> Platform::warm_instances(int deployment) const {
  std::vector<InstanceId> out;
  for (const auto& [id, inst] : instances_) {
    if (inst.deployment == deployment && inst.state == InstanceState::kWarm) out.push_back(id);
  }
  return out;
}

std::vector<InstanceId> Platform::all_live() const {
  std::vector<InstanceId> out;
  for (const auto& [id, inst] : instances_) {
    if (inst.state != InstanceState::kTerminated) out.push_back(id);
  }
  return out;
}

std::size_t Platform::queued(int deployment) const { return queues_[static_cast<std::size_t>(deployment)].size(); }

ActiveCounts Platform::active_counts() const {
  ActiveCounts c;
  c.per_deployment.assign(static_cast<std::size_t>(cfg_.n_deployments), 0);
  for (const auto& [id, inst] : instances_) {
    if (inst.state == InstanceState::kTerminated) continue;
    ++c.per_deployment[static_cast<std::size_t>(inst.deployment)];
    ++c.total;
  }
  c.vcpu_in_use = c.total * cfg_.per_instance_vcpu;
  for (const auto& q : queues_) c.queued += q.size();
  return c;
}

void Platform::finalize(sim::Time end) {
  if (finalized_at_ >= 0) return;
  finalized_at_ = end;
  for (auto& [id, inst] : instances_) {
    if (inst.state == InstanceState::kTerminated) continue;
    if (inst.active_requests > 0) inst.busy.push_back(BusyInterval{inst.busy_since, end});
    inst.active_requests = 0;
    inst.terminated_at = end;
  }
}

}  // namespace lfs::faas
