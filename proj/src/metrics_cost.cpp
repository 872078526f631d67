#include "lambdafs/metrics_cost.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lfs::metrics {

void CostModel::validate() const {
  if (gb_second_price < 0 || per_million_requests < 0 || vm_hour_price < 0) {
    throw std::invalid_argument("prices must be >= 0");
  }
  if (granularity <= 0) throw std::invalid_argument("billing granularity must be positive");
  if (vm_vcpus <= 0 || vm_mem_gb < 0) throw std::invalid_argument("invalid serverful vm shape");
}

double CostModel::effective_vm_hour_price() const {
  if (vm_hour_price > 0.0) return vm_hour_price;
  return vm_mem_gb * gb_second_price * 3600.0;
}

std::uint64_t billed_slices(std::vector<faas::BusyInterval> intervals, sim::Duration granularity) {
  std::sort(intervals.begin(), intervals.end(),
            [](const faas::BusyInterval& a, const faas::BusyInterval& b) { return a.start < b.start; });
  std::uint64_t total = 0;
  std::int64_t next_free = std::numeric_limits<std::int64_t>::min();
  for (const auto& iv : intervals) {
    if (iv.end <= iv.start) continue;
    std::int64_t first = iv.start / granularity;
    std::int64_t last = (iv.end - 1) / granularity;
    first = std::max(first, next_free);
    if (last >= first) total += static_cast<std::uint64_t>(last - first + 1);
    next_free = std::max(next_free, last + 1);
  }
  return total;
}

double request_fee(std::uint64_t requests, const CostModel& model) {
  return static_cast<double>(requests) / 1e6 * model.per_million_requests;
}

double cost_pay_per_use(const std::vector<InstanceUsage>& usage, std::uint64_t requests, const CostModel& model) {
  double total = 0.0;
  double slice_seconds = static_cast<double>(model.granularity) / 1e6;
  for (const auto& u : usage) {
    double seconds = static_cast<double>(billed_slices(u.busy, model.granularity)) * slice_seconds;
    total += seconds * u.mem_gb * model.gb_second_price;
  }
  return total + request_fee(requests, model);
}

double cost_simplified(const std::vector<InstanceUsage>& usage, std::uint64_t requests, const CostModel& model) {
  double total = 0.0;
  double slice_seconds = static_cast<double>(model.granularity) / 1e6;
  for (const auto& u : usage) {
    std::uint64_t slices = billed_slices({faas::BusyInterval{u.provisioned_from, u.provisioned_to}}, model.granularity);
    total += static_cast<double>(slices) * slice_seconds * u.mem_gb * model.gb_second_price;
  }
  return total + request_fee(requests, model);
}

double cost_serverful(double cluster_vcpu, sim::Duration run_length, const CostModel& model) {
  double vms = std::ceil(cluster_vcpu / model.vm_vcpus - 1e-12);
  double hours = static_cast<double>(run_length) / 3.6e9;
  return vms * hours * model.effective_vm_hour_price();
}

std::vector<InstanceUsage> usage_from_platform(const faas::Platform& platform) {
  std::vector<InstanceUsage> out;
  for (const auto& [id, inst] : platform.instances()) {
    InstanceUsage u;
    u.mem_gb = platform.config().mem_gb;
    u.busy = inst.busy;
    u.provisioned_from = inst.started_at;
    u.provisioned_to = inst.terminated_at >= 0 ? inst.terminated_at : inst.started_at;
    out.push_back(std::move(u));
  }
  return out;
}

sim::Duration quantile(const std::vector<sim::Duration>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  if (q <= 0.0) return sorted.front();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size()) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

QuantileTable latency_cdf(std::vector<sim::Duration> samples) {
  QuantileTable t;
  if (samples.empty()) return t;
  std::sort(samples.begin(), samples.end());
  t.count = samples.size();
  double sum = 0.0;
  for (auto s : samples) sum += static_cast<double>(s);
  t.mean = sum / static_cast<double>(samples.size());
  t.p50 = quantile(samples, 0.50);
  t.p90 = quantile(samples, 0.90);
  t.p99 = quantile(samples, 0.99);
  t.p999 = quantile(samples, 0.999);
  t.max = samples.back();
  return t;
}

std::string cdf_csv(std::vector<sim::Duration> samples, std::size_t points) {
  std::ostringstream os;
  os << "latency_us,cdf\n";
  if (samples.empty()) return os.str();
  std::sort(samples.begin(), samples.end());
  std::size_t n = samples.size();
  std::size_t rows = std::min(points, n);
  for (std::size_t i = 1; i <= rows; ++i) {
    std::size_t rank = (i * n + rows - 1) / rows;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", static_cast<double>(rank) / static_cast<double>(n));
    os << samples[rank - 1] << ',' << buf << '\n';
  }
  return os.str();
}

MetricSeries::MetricSeries(sim::Duration duration) {
  auto n = static_cast<std::size_t>(std::max<sim::Duration>(1, (duration + sim::sec(1) - 1) / sim::sec(1)));
  buckets_.resize(n);
}

void MetricSeries::truncate(std::size_t n) {
  if (n < buckets_.size()) buckets_.resize(std::max<std::size_t>(1, n));
}

Bucket* MetricSeries::bucket(sim::Time at) {
  if (at < 0) return nullptr;
  auto idx = static_cast<std::size_t>(at / sim::sec(1));
  if (idx >= buckets_.size()) return nullptr;
  return &buckets_[idx];
}

void MetricSeries::record_completion(sim::Time at, OpKind kind, sim::Duration latency, bool success) {
  if (!success) {
    ++failed_;
    return;
  }
  ++completed_;
  latencies_[static_cast<std::size_t>(kind)].push_back(latency);
  if (Bucket* b = bucket(at)) ++b->ops;
}

void MetricSeries::record_request(sim::Time at) {
  if (Bucket* b = bucket(at)) ++b->requests;
}

void MetricSeries::sample_platform(sim::Time at, const faas::ActiveCounts& counts) {
  Bucket* b = bucket(at);
  if (b == nullptr) return;
  b->instances = counts.total;
  b->vcpu = counts.vcpu_in_use;
  b->queued = counts.queued;
  b->per_deployment = counts.per_deployment;
}

void MetricSeries::attribute_costs(const std::vector<InstanceUsage>& usage, const CostModel& model) {
  const sim::Duration g = model.granularity;
  const double slice_cost_per_gb = static_cast<double>(g) / 1e6 * model.gb_second_price;
  const std::int64_t per_second = sim::sec(1) / g;
  auto spread = [&](std::int64_t first, std::int64_t last, double mem, bool ppu) {
    while (first <= last) {
      std::int64_t sec_idx = first / per_second;
      std::int64_t sec_end = (sec_idx + 1) * per_second - 1;
      std::int64_t upto = std::min(last, sec_end);
      if (sec_idx >= 0 && static_cast<std::size_t>(sec_idx) < buckets_.size()) {
        double c = static_cast<double>(upto - first + 1) * slice_cost_per_gb * mem;
        (ppu ? buckets_[static_cast<std::size_t>(sec_idx)].cost_ppu : buckets_[static_cast<std::size_t>(sec_idx)].cost_simpl) += c;
      }
      first = upto + 1;
    }
  };
  for (const auto& u : usage) {
    auto busy = u.busy;
    std::sort(busy.begin(), busy.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    std::int64_t next_free = std::numeric_limits<std::int64_t>::min();
    for (const auto& iv : busy) {
      if (iv.end <= iv.start) continue;
      std::int64_t first = std::max(iv.start / g, next_free);
      std::int64_t last = (iv.end - 1) / g;
      if (last >= first) spread(first, last, u.mem_gb, true);
      next_free = std::max(next_free, last + 1);
    }
    if (u.provisioned_to > u.provisioned_from) spread(u.provisioned_from / g, (u.provisioned_to - 1) / g, u.mem_gb, false);
  }
  for (auto& b : buckets_) {
    double fee = request_fee(b.requests, model);
    b.cost_ppu += fee;
    b.cost_simpl += fee;
  }
}

std::vector<sim::Duration> MetricSeries::all_latencies() const {
  std::vector<sim::Duration> out;
  for (const auto& v : latencies_) out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::string MetricSeries::throughput_csv() const {
  std::ostringstream os;
  os << "t,ops,instances,vcpu,cost_ppu,cost_simpl\n";
  double cum_ppu = 0.0;
  double cum_simpl = 0.0;
  char buf[160];
  for (std::size_t i = 0; i < buckets_.size(); ++i) {
    const Bucket& b = buckets_[i];
    cum_ppu += b.cost_ppu;
    cum_simpl += b.cost_simpl;
    std::snprintf(buf, sizeof buf, "%zu,%llu,%d,%.2f,%.9f,%.9f\n", i, static_cast<unsigned long long>(b.ops), b.instances,
                  b.vcpu, cum_ppu, cum_simpl);
    os << buf;
  }
  return os.str();
}

std::string MetricSeries::platform_csv(int n_deployments) const {
  std::ostringstream os;
  os << "t";
  for (int d = 0; d < n_deployments; ++d) os << ",deployment_" << d;
  os << ",vcpu,queued\n";
  char buf[64];
  for (std::size_t i = 0; i < buckets_.size(); ++i) {
    const Bucket& b = buckets_[i];
    os << i;
    for (int d = 0; d < n_deployments; ++d) {
      int v = static_cast<std::size_t>(d) < b.per_deployment.size() ? b.per_deployment[static_cast<std::size_t>(d)] : 0;
      os << ',' << v;
    }
    std::snprintf(buf, sizeof buf, ",%.2f,%zu\n", b.vcpu, b.queued);
    os << buf;
  }
  return os.str();
}

std::vector<std::optional<double>> MetricSeries::perf_per_cost_series() const {
  std::vector<std::optional<double>> out;
  out.reserve(buckets_.size());
  for (const auto& b : buckets_) {
    if (b.cost_ppu <= 0.0) {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(static_cast<double>(b.ops) / b.cost_ppu);
    }
  }
  return out;
}

std::optional<double> aggregate_perf_per_cost(double avg_throughput, double total_cost) {
  if (total_cost <= 0.0) return std::nullopt;
  return avg_throughput / total_cost;
}

}  // namespace lfs::metrics
