#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "lambdafs/sim_kernel.hpp"

namespace lfs::faas {

using InstanceId = std::uint64_t;
inline constexpr InstanceId kNoInstance = 0;

enum class InstanceState : std::uint8_t { kColdStarting, kWarm, kTerminated };

struct PlatformConfig {
  int n_deployments = 4;
  int concurrency_level = 4;
  double vcpu_budget = 512.0;
  double per_instance_vcpu = 6.25;
  double mem_gb = 30.0;
  sim::Duration idle_timeout = sim::sec(60);
  sim::Duration reclaim_tick = sim::sec(1);
  // 0 means unbounded.
  int max_instances_per_deployment = 0;
  bool evict_to_admit = false;

  void validate() const;
  int max_live_instances() const;
};

struct BusyInterval {
  sim::Time start;
  sim::Time end;
};

struct Instance {
  InstanceId id = kNoInstance;
  int deployment = 0;
  InstanceState state = InstanceState::kColdStarting;
  int slots_used = 0;
  int cores = 1;
  int cores_busy = 0;
  int active_requests = 0;
  sim::Time started_at = 0;
  sim::Time ready_at = 0;
  sim::Time last_active = 0;
  sim::Time terminated_at = -1;
  sim::Time busy_since = 0;
  std::vector<BusyInterval> busy;
  std::uint64_t requests_served = 0;
  std::deque<std::pair<sim::Duration, std::function<void()>>> run_queue;
  std::vector<std::function<void()>> on_ready;
};

struct ActiveCounts {
  std::vector<int> per_deployment;
  int total = 0;
  double vcpu_in_use = 0.0;
  std::size_t queued = 0;
};

/// Emulated FaaS platform: fixed deployments, dynamic instance pools, cold
/// starts, per-instance HTTP concurrency slots, a FIFO invoker queue per
/// deployment, CPU contention and idle reclamation.
class Platform {
 public:
  using StartFn = std::function<void(InstanceId)>;
  using InstanceHook = std::function<void(const Instance&)>;

  Platform(sim::Simulator& sim, PlatformConfig cfg, sim::LatencyModel latency, std::uint64_t seed);

  const PlatformConfig& config() const { return cfg_; }

  /// Begins periodic idle reclamation.
  void start();

  /// Routes an HTTP invocation arriving at the gateway. `on_start` runs once
  /// the chosen instance is warm; the request then holds one concurrency slot
  /// until `release_slot`.
  void route_http(int deployment, StartFn on_start);
  void release_slot(InstanceId id);

  /// Returns a live instance of `deployment` for helper work (warm preferred,
  /// else cold-starting, else a fresh cold start if admissible).
  std::optional<InstanceId> acquire_helper(int deployment);

  void begin_activity(InstanceId id);
  void end_activity(InstanceId id);
  /// FIFO CPU burst on one of the instance's cores.
  void cpu(InstanceId id, sim::Duration cost, std::function<void()> done);
  /// Runs `fn` once the instance is warm (immediately when it already is).
  void when_ready(InstanceId id, std::function<void()> fn);

  void terminate(InstanceId id);
  void reclaim_idle();

  bool is_live(InstanceId id) const;
  bool is_warm(InstanceId id) const;
  const Instance* instance(InstanceId id) const;
  std::vector<InstanceId> live_instances(int deployment) const;
  std::vector<InstanceId> warm_instances(int deployment) const;
  std::vector<InstanceId> all_live() const;
  ActiveCounts active_counts() const;
  std::size_t queued(int deployment) const;
  double live_vcpu() const;

  /// Closes open busy intervals and provisioned lifetimes at `end`.
  void finalize(sim::Time end);
  const std::map<InstanceId, Instance>& instances() const { return instances_; }

  struct Stats {
    std::uint64_t cold_starts = 0;
    std::uint64_t terminations = 0;
    std::uint64_t reclaimed = 0;
    std::uint64_t evictions = 0;
    std::uint64_t queued_invocations = 0;
    std::uint64_t http_invocations = 0;
    double peak_vcpu = 0.0;
  };
  const Stats& stats() const { return stats_; }

  std::vector<InstanceHook> on_cold_start;
  std::vector<InstanceHook> on_ready;
  std::vector<InstanceHook> on_terminate;

 private:
  Instance* find(InstanceId id);
  void start_tick();
  bool can_cold_start(int deployment) const;
  std::optional<InstanceId> cold_start(int deployment);
  bool evict_for(int deployment);
  void assign(Instance& inst, StartFn fn);
  void drain_queue(int deployment);
  void drain_all_queues();
  void finish_cpu(InstanceId id);

  sim::Simulator& sim_;
  PlatformConfig cfg_;
  sim::LatencyModel latency_;
  sim::Rng rng_;
  std::map<InstanceId, Instance> instances_;
  std::vector<std::deque<StartFn>> queues_;
  InstanceId next_id_ = 1;
  int live_count_ = 0;
  bool started_ = false;
  sim::Time finalized_at_ = -1;
  Stats stats_;
};

}  // namespace lfs::faas
