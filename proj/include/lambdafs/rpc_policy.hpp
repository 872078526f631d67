#pragma once

#include <cstddef>
#include <deque>

#include "lambdafs/sim_kernel.hpp"

namespace lfs::rpc {

struct BackoffConfig {
  sim::Duration base = sim::msec(50);
  sim::Duration cap = sim::sec(5);
  int max_attempts = 8;
};

/// Upper bound of the full-jitter window: min(cap, base * 2^(attempt-1)).
sim::Duration backoff_bound(int attempt, const BackoffConfig& cfg);

/// Uniform in [0, backoff_bound(attempt)].
sim::Duration next_backoff(int attempt, const BackoffConfig& cfg, sim::Rng& rng);

/// Moving window over the last W completed-request latencies.
class LatencyWindow {
 public:
  explicit LatencyWindow(std::size_t capacity = 100);

  void add(sim::Duration latency);
  void clear();
  bool empty() const { return samples_.empty(); }
  bool full() const { return samples_.size() == capacity_; }
  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  double average() const;

 private:
  std::size_t capacity_;
  std::deque<sim::Duration> samples_;
  double sum_ = 0.0;
};

enum class StragglerDecision { kKeep, kResubmit };

/// Resubmit when elapsed >= k * window average; an empty window always keeps.
StragglerDecision check_straggler(sim::Duration elapsed, const LatencyWindow& window, double k);

enum class ClientMode { kNormal, kAntiThrash };

/// Anti-thrash entry on a latency spike over the moving average, exit once a
/// full window since entry averages below threshold x the pre-entry average.
class ModeTracker {
 public:
  explicit ModeTracker(double threshold = 2.5, bool enabled = true) : threshold_(threshold), enabled_(enabled) {}

  /// `window` must not yet contain `latency`.
  ClientMode update(sim::Duration latency, const LatencyWindow& window);
  ClientMode mode() const { return mode_; }
  double entry_baseline() const { return baseline_; }
  std::uint64_t entries() const { return entries_; }

 private:
  double threshold_;
  bool enabled_;
  ClientMode mode_ = ClientMode::kNormal;
  double baseline_ = 0.0;
  std::size_t since_entry_ = 0;
  std::uint64_t entries_ = 0;
};

/// Expected steady-state instance count ceil(R * p * s / concurrency_level)
/// for request rate R (1/s), replacement probability p and mean HTTP service
/// time s (seconds).
int predict_instances(double request_rate, double http_probability, double service_seconds, int concurrency_level);

}  // namespace lfs::rpc
