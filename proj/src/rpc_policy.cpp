#include "lambdafs/rpc_policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lfs::rpc {

sim::Duration backoff_bound(int attempt, const BackoffConfig& cfg) {
  if (attempt < 1) throw std::invalid_argument("attempt must be >= 1");
  sim::Duration bound = cfg.base;
  for (int i = 1; i < attempt && bound < cfg.cap; ++i) bound *= 2;
  return std::min(bound, cfg.cap);
}

sim::Duration next_backoff(int attempt, const BackoffConfig& cfg, sim::Rng& rng) {
  return rng.uniform_int(0, backoff_bound(attempt, cfg));
}

LatencyWindow::LatencyWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("latency window capacity must be positive");
}

void LatencyWindow::add(sim::Duration latency) {
  samples_.push_back(latency);
  sum_ += static_cast<double>(latency);
  if (samples_.size() > capacity_) {
    sum_ -= static_cast<double>(samples_.front());
    samples_.pop_front();
  }
}

void LatencyWindow::clear() {
  samples_.clear();
  sum_ = 0.0;
}

double LatencyWindow::average() const {
  if (samples_.empty()) return 0.0;
  return sum_ / static_cast<double>(samples_.size());
}

StragglerDecision check_straggler(sim::Duration elapsed, const LatencyWindow& window, double k) {
  if (window.empty()) return StragglerDecision::kKeep;
  return static_cast<double>(elapsed) >= k * window.average() ? StragglerDecision::kResubmit : StragglerDecision::kKeep;
}

ClientMode ModeTracker::update(sim::Duration latency, const LatencyWindow& window) {
  if (!enabled_ || window.empty()) return mode_;
  double avg = window.average();
  if (mode_ == ClientMode::kNormal) {
    if (static_cast<double>(latency) >= threshold_ * avg) {
      mode_ = ClientMode::kAntiThrash;
      baseline_ = avg;
      since_entry_ = 0;
      ++entries_;
    }
    return mode_;
  }
  ++since_entry_;
  if (since_entry_ >= window.capacity() && avg < threshold_ * baseline_) {
    mode_ = ClientMode::kNormal;
  }
  return mode_;
}

int predict_instances(double request_rate, double http_probability, double service_seconds, int concurrency_level) {
  if (concurrency_level < 1) throw std::invalid_argument("concurrency level must be >= 1");
  double load = request_rate * http_probability * service_seconds / static_cast<double>(concurrency_level);
  return static_cast<int>(std::ceil(load - 1e-12));
}

}  // namespace lfs::rpc
