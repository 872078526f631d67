#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lambdafs/faas_platform.hpp"
#include "lambdafs/fs_types.hpp"
#include "lambdafs/sim_kernel.hpp"

namespace lfs::metrics {

struct CostModel {
  double gb_second_price = 0.0000166667;
  double per_million_requests = 0.20;
  sim::Duration granularity = sim::msec(1);
  // Serverful cluster VM shape; a non-positive price selects the
  // memory-equivalent rate vm_mem_gb * gb_second_price * 3600.
  double vm_vcpus = 16.0;
  double vm_mem_gb = 128.0;
  double vm_hour_price = 0.0;

  void validate() const;
  double effective_vm_hour_price() const;
};

struct InstanceUsage {
  double mem_gb = 0.0;
  std::vector<faas::BusyInterval> busy;
  sim::Time provisioned_from = 0;
  sim::Time provisioned_to = 0;
};

/// Number of distinct billing slices touched by a set of busy intervals.
std::uint64_t billed_slices(std::vector<faas::BusyInterval> intervals, sim::Duration granularity);

double request_fee(std::uint64_t requests, const CostModel& model);
double cost_pay_per_use(const std::vector<InstanceUsage>& usage, std::uint64_t requests, const CostModel& model);
double cost_simplified(const std::vector<InstanceUsage>& usage, std::uint64_t requests, const CostModel& model);
/// Fixed cluster of ceil(cluster_vcpu / vm_vcpus) VMs for the whole run.
double cost_serverful(double cluster_vcpu, sim::Duration run_length, const CostModel& model);

std::vector<InstanceUsage> usage_from_platform(const faas::Platform& platform);

/// Nearest-rank quantile of an ascending sample vector; q in (0, 1].
sim::Duration quantile(const std::vector<sim::Duration>& sorted, double q);

struct QuantileTable {
  std::size_t count = 0;
  double mean = 0.0;
  sim::Duration p50 = 0;
  sim::Duration p90 = 0;
  sim::Duration p99 = 0;
  sim::Duration p999 = 0;
  sim::Duration max = 0;
};

QuantileTable latency_cdf(std::vector<sim::Duration> samples);

/// CSV with header "latency_us,cdf": at most `points` rows of the empirical CDF.
std::string cdf_csv(std::vector<sim::Duration> samples, std::size_t points = 1000);

struct Bucket {
  std::uint64_t ops = 0;
  std::uint64_t requests = 0;
  int instances = 0;
  double vcpu = 0.0;
  std::size_t queued = 0;
  std::vector<int> per_deployment;
  double cost_ppu = 0.0;     // incurred within this second
  double cost_simpl = 0.0;   // incurred within this second
};

/// Per-second recorder covering [0, duration).
class MetricSeries {
 public:
  explicit MetricSeries(sim::Duration duration = sim::sec(1));

  std::size_t seconds() const { return buckets_.size(); }
  /// Drops buckets beyond the first `n` seconds.
  void truncate(std::size_t n);
  void record_completion(sim::Time at, OpKind kind, sim::Duration latency, bool success);
  void record_request(sim::Time at);
  void sample_platform(sim::Time at, const faas::ActiveCounts& counts);
  /// Distributes billed time of every instance across buckets.
  void attribute_costs(const std::vector<InstanceUsage>& usage, const CostModel& model);

  const std::vector<Bucket>& buckets() const { return buckets_; }
  const std::vector<sim::Duration>& latencies(OpKind kind) const { return latencies_[static_cast<std::size_t>(kind)]; }
  std::vector<sim::Duration> all_latencies() const;
  std::uint64_t completed() const { return completed_; }
  std::uint64_t failed() const { return failed_; }

  std::string throughput_csv() const;
  std::string platform_csv(int n_deployments) const;

  /// ops / cost per second; absent when the second cost nothing.
  std::vector<std::optional<double>> perf_per_cost_series() const;

 private:
  Bucket* bucket(sim::Time at);

  std::vector<Bucket> buckets_;
  std::array<std::vector<sim::Duration>, kOpKindCount> latencies_;
  std::uint64_t completed_ = 0;
  std::uint64_t failed_ = 0;
};

/// Average throughput divided by total cost; absent when cost is zero.
std::optional<double> aggregate_perf_per_cost(double avg_throughput, double total_cost);

}  // namespace lfs::metrics
