#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "lambdafs/metrics_cost.hpp"

using namespace lfs;
using namespace lfs::metrics;

namespace {

InstanceUsage usage(double mem, std::vector<faas::BusyInterval> busy, sim::Time from, sim::Time to) {
  InstanceUsage u;
  u.mem_gb = mem;
  u.busy = std::move(busy);
  u.provisioned_from = from;
  u.provisioned_to = to;
  return u;
}

}  // namespace

TEST(Cost, ThirtyGbForOneSecond) {
  CostModel m;
  auto u = usage(30.0, {{0, sim::sec(1)}}, 0, sim::sec(1));
  EXPECT_NEAR(cost_pay_per_use({u}, 0, m), 0.000500001, 1e-12);
  EXPECT_NEAR(cost_simplified({u}, 0, m), 0.000500001, 1e-12);
}

TEST(Cost, MillionRequestsCostTwentyCents) {
  CostModel m;
  EXPECT_NEAR(request_fee(1000000, m), 0.20, 1e-12);
  EXPECT_NEAR(cost_pay_per_use({}, 1000000, m), 0.20, 1e-12);
  EXPECT_DOUBLE_EQ(request_fee(0, m), 0.0);
}

TEST(Cost, IdleInstanceCostsNothingPayPerUse) {
  CostModel m;
  auto u = usage(30.0, {}, 0, sim::sec(60));
  EXPECT_DOUBLE_EQ(cost_pay_per_use({u}, 0, m), 0.0);
  EXPECT_NEAR(cost_simplified({u}, 0, m), 60 * 30 * m.gb_second_price, 1e-12);
}

TEST(Cost, RoundsUpToGranularityAndMergesOverlap) {
  EXPECT_EQ(billed_slices({{0, 1}}, sim::msec(1)), 1u);
  EXPECT_EQ(billed_slices({{0, 1000}}, sim::msec(1)), 1u);
  EXPECT_EQ(billed_slices({{0, 1001}}, sim::msec(1)), 2u);
  EXPECT_EQ(billed_slices({{0, 500}, {200, 900}}, sim::msec(1)), 1u);
  EXPECT_EQ(billed_slices({{0, 500}, {1500, 2500}}, sim::msec(1)), 3u);
  EXPECT_EQ(billed_slices({{5, 5}}, sim::msec(1)), 0u);
}

TEST(Cost, HalfDutyCycleDoublesSimplified) {
  CostModel m;
  std::vector<faas::BusyInterval> busy;
  for (int s = 0; s < 60; s += 2) busy.push_back({sim::sec(s), sim::sec(s + 1)});
  auto u = usage(30.0, busy, 0, sim::sec(60));
  double ppu = cost_pay_per_use({u}, 0, m);
  double simp = cost_simplified({u}, 0, m);
  EXPECT_NEAR(simp / ppu, 2.0, 1e-9);
  EXPECT_GE(simp, ppu);
}

TEST(Cost, ServerfulCluster) {
  CostModel m;
  EXPECT_NEAR(m.effective_vm_hour_price(), 128 * m.gb_second_price * 3600, 1e-12);
  EXPECT_NEAR(cost_serverful(512.0, sim::sec(3600), m), 32 * m.effective_vm_hour_price(), 1e-9);
  EXPECT_NEAR(cost_serverful(17.0, sim::sec(1800), m), 2 * 0.5 * m.effective_vm_hour_price(), 1e-12);
  m.vm_hour_price = 1.5;
  EXPECT_DOUBLE_EQ(m.effective_vm_hour_price(), 1.5);
}

TEST(Quantiles, UniformMillisecondsMedian) {
  std::vector<sim::Duration> v;
  for (int i = 1; i <= 100; ++i) v.push_back(sim::msec(i));
  auto t = latency_cdf(v);
  EXPECT_NEAR(static_cast<double>(t.p50), 50000.0, 2000.0);
  EXPECT_EQ(t.p99, sim::msec(99));
  EXPECT_EQ(t.max, sim::msec(100));
  EXPECT_EQ(t.count, 100u);
  EXPECT_DOUBLE_EQ(t.mean, 50500.0);
  EXPECT_THROW(quantile({}, 0.5), std::invalid_argument);
  EXPECT_EQ(latency_cdf({}).count, 0u);
}

TEST(Quantiles, CdfCsvIsMonotone) {
  std::vector<sim::Duration> v;
  for (int i = 0; i < 5000; ++i) v.push_back((i * 7919) % 1000);
  std::istringstream is(cdf_csv(v, 100));
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "latency_us,cdf");
  double prev_x = -1;
  double prev_c = 0;
  int rows = 0;
  while (std::getline(is, line)) {
    auto comma = line.find(',');
    double x = std::stod(line.substr(0, comma));
    double c = std::stod(line.substr(comma + 1));
    EXPECT_GE(x, prev_x);
    EXPECT_GT(c, prev_c);
    prev_x = x;
    prev_c = c;
    ++rows;
  }
  EXPECT_EQ(rows, 100);
  EXPECT_DOUBLE_EQ(prev_c, 1.0);
}

TEST(Series, BucketsAndPerfPerCost) {
  MetricSeries s(sim::sec(3));
  ASSERT_EQ(s.seconds(), 3u);
  s.record_completion(sim::msec(500), OpKind::kRead, 100, true);
  s.record_completion(sim::msec(1500), OpKind::kRead, 200, true);
  s.record_completion(sim::msec(1600), OpKind::kCreate, 300, false);
  EXPECT_EQ(s.buckets()[0].ops, 1u);
  EXPECT_EQ(s.buckets()[1].ops, 1u);
  EXPECT_EQ(s.completed(), 2u);
  EXPECT_EQ(s.failed(), 1u);
  CostModel m;
  s.attribute_costs({usage(30.0, {{sim::msec(1200), sim::msec(1700)}}, 0, sim::sec(3))}, m);
  auto ppc = s.perf_per_cost_series();
  EXPECT_FALSE(ppc[0].has_value());
  ASSERT_TRUE(ppc[1].has_value());
  EXPECT_NEAR(*ppc[1], 1.0 / (0.5 * 30 * m.gb_second_price), 1e-3);
  double total_simpl = 0;
  for (const auto& b : s.buckets()) total_simpl += b.cost_simpl;
  EXPECT_NEAR(total_simpl, 3 * 30 * m.gb_second_price, 1e-12);
  EXPECT_FALSE(aggregate_perf_per_cost(10.0, 0.0).has_value());
  EXPECT_DOUBLE_EQ(*aggregate_perf_per_cost(10.0, 2.0), 5.0);
}

TEST(Series, BucketCostsSumToTotals) {
  CostModel m;
  std::vector<InstanceUsage> u{usage(19.2, {{100, 2500000}, {3000000, 3000001}}, 0, sim::sec(4)),
                               usage(30.0, {{sim::msec(10), sim::msec(3999)}}, sim::msec(5), sim::sec(4))};
  MetricSeries s(sim::sec(4));
  s.attribute_costs(u, m);
  double ppu = 0;
  double simp = 0;
  for (const auto& b : s.buckets()) {
    ppu += b.cost_ppu;
    simp += b.cost_simpl;
  }
  EXPECT_NEAR(ppu, cost_pay_per_use(u, 0, m), 1e-12);
  EXPECT_NEAR(simp, cost_simplified(u, 0, m), 1e-12);
}
