#include <gtest/gtest.h>

#include <functional>
#include <optional>
#include <vector>

#include "harness.hpp"
#include "lambdafs/faas_platform.hpp"
#include "lambdafs/rpc_policy.hpp"

using namespace lfs;
using namespace lfs::faas;

namespace {

PlatformConfig one_deployment() {
  PlatformConfig c;
  c.n_deployments = 1;
  return c;
}

}  // namespace

TEST(Platform, FirstInvocationColdStarts) {
  sim::Simulator s;
  Platform p(s, one_deployment(), sim::LatencyModel{}, 1);
  p.start();
  sim::Time started = -1;
  p.route_http(0, [&](InstanceId) { started = s.now(); });
  s.run_until(sim::sec(2));
  EXPECT_EQ(p.stats().cold_starts, 1u);
  EXPECT_GE(started, 300000);
  EXPECT_LE(started, 800000);
}

TEST(Platform, FifthRequestAtConcurrencyFourColdStartsSecondInstance) {
  sim::Simulator s;
  Platform p(s, one_deployment(), sim::LatencyModel{}, 1);
  p.start();
  std::vector<InstanceId> served;
  for (int i = 0; i < 4; ++i) p.route_http(0, [&](InstanceId id) { served.push_back(id); });
  s.run_until(sim::sec(2));
  ASSERT_EQ(served.size(), 4u);
  EXPECT_EQ(p.live_instances(0).size(), 1u);
  p.route_http(0, [&](InstanceId id) { served.push_back(id); });
  s.run_until(sim::sec(4));
  ASSERT_EQ(served.size(), 5u);
  EXPECT_EQ(p.live_instances(0).size(), 2u);
  EXPECT_NE(served[4], served[0]);
  EXPECT_EQ(p.stats().cold_starts, 2u);
}

TEST(Platform, ExhaustedBudgetQueuesUntilSlotFrees) {
  PlatformConfig c = one_deployment();
  c.vcpu_budget = 6.25;
  sim::Simulator s;
  Platform p(s, c, sim::LatencyModel{}, 1);
  p.start();
  std::vector<InstanceId> served;
  for (int i = 0; i < 5; ++i) p.route_http(0, [&](InstanceId id) { served.push_back(id); });
  s.run_until(sim::sec(2));
  EXPECT_EQ(served.size(), 4u);
  EXPECT_EQ(p.queued(0), 1u);
  EXPECT_LE(p.live_vcpu(), c.vcpu_budget);
  p.release_slot(served[0]);
  s.run_until(sim::sec(3));
  EXPECT_EQ(served.size(), 5u);
  EXPECT_EQ(p.stats().cold_starts, 1u);
}

TEST(Platform, IdleInstanceReclaimedAfterTimeout) {
  sim::Simulator s;
  Platform p(s, one_deployment(), sim::LatencyModel{}, 1);
  p.start();
  InstanceId inst = kNoInstance;
  p.route_http(0, [&](InstanceId id) {
    inst = id;
    p.begin_activity(id);
    p.end_activity(id);
    p.release_slot(id);
  });
  s.run_until(sim::sec(1));
  ASSERT_NE(inst, kNoInstance);
  sim::Time idle_from = p.instance(inst)->last_active;
  s.run_until(idle_from + sim::sec(59));
  EXPECT_TRUE(p.is_live(inst));
  s.run_until(idle_from + sim::sec(61));
  EXPECT_FALSE(p.is_live(inst));
  EXPECT_EQ(p.stats().reclaimed, 1u);
}

TEST(Platform, CountsFreshAndAfterColdStarts) {
  sim::Simulator s;
  PlatformConfig c;
  Platform p(s, c, sim::LatencyModel{}, 1);
  auto fresh = p.active_counts();
  EXPECT_EQ(fresh.total, 0);
  EXPECT_EQ(fresh.vcpu_in_use, 0.0);
  for (int d = 0; d < 3; ++d) p.acquire_helper(d);
  s.run_until(sim::sec(1));
  EXPECT_EQ(p.active_counts().total, 3);
  EXPECT_EQ(p.stats().cold_starts, 3u);
}

TEST(Platform, CpuBurstsQueuePerCore) {
  sim::Simulator s;
  PlatformConfig c = one_deployment();
  c.per_instance_vcpu = 1.0;
  Platform p(s, c, sim::LatencyModel{}, 1);
  auto id = *p.acquire_helper(0);
  s.run_until(sim::sec(1));
  std::vector<sim::Time> done;
  sim::Time t0 = s.now();
  for (int i = 0; i < 3; ++i) p.cpu(id, 1000, [&] { done.push_back(s.now() - t0); });
  s.run_until(t0 + sim::msec(10));
  EXPECT_EQ(done, (std::vector<sim::Time>{1000, 2000, 3000}));
}

TEST(Platform, JoinAndLeavePerInstance) {
  testkit::Cluster c;
  auto a = c.start_instance(0);
  auto b = c.start_instance(1);
  EXPECT_EQ(c.coord.stats().joins, 2u);
  c.platform.terminate(a);
  c.platform.terminate(b);
  EXPECT_EQ(c.coord.stats().leaves, 2u);
  EXPECT_FALSE(c.coord.is_live(a));
}

TEST(Platform, TerminationDuringWriteAbortsTransaction) {
  testkit::Cluster c;
  auto inst = c.start_instance(0);
  auto f = c.store.create_direct(kRootId, "f", NodeKind::kFile);
  store::TxnId t = c.store.begin(inst);
  std::optional<store::StoreError> got;
  c.store.lock_exclusive(t, {f}, [&](store::StoreError e) { got = e; });
  ASSERT_EQ(got, store::StoreError::kNone);
  c.store.put(t, *c.store.get(f));
  c.platform.terminate(inst);
  EXPECT_FALSE(c.store.is_open(t));
  store::TxnId t2 = c.store.begin(99);
  std::optional<store::StoreError> got2;
  c.store.lock_exclusive(t2, {f}, [&](store::StoreError e) { got2 = e; });
  EXPECT_EQ(got2, store::StoreError::kNone);
}

namespace {

/// Evenly spaced HTTP invocations at `rate`/s, each holding a slot for
/// `service`; returns live instances once idle ones have been reclaimed.
int steady_instances(double rate, sim::Duration service) {
  PlatformConfig c = one_deployment();
  c.idle_timeout = sim::sec(10);
  sim::Simulator s;
  Platform p(s, c, sim::LatencyModel{}, 5);
  p.start();
  const sim::Duration gap = static_cast<sim::Duration>(1e6 / rate);
  const sim::Time end = sim::sec(60);
  std::function<void()> arrive = [&] {
    p.route_http(0, [&](InstanceId id) {
      p.begin_activity(id);
      s.schedule(service, sim::EventKind::kRpcComplete, [&p, id] {
        p.end_activity(id);
        p.release_slot(id);
      });
    });
    if (s.now() + gap < end) s.schedule(gap, sim::EventKind::kRpcArrival, arrive);
  };
  s.schedule(0, sim::EventKind::kRpcArrival, arrive);
  s.run_until(end);
  return static_cast<int>(p.live_instances(0).size());
}

}  // namespace

TEST(Platform, SteadyStateMatchesPredictionAndGrowsWithRate) {
  const sim::Duration service = sim::msec(10);
  int previous = 0;
  for (double rate : {1000.0, 2000.0, 4000.0}) {
    int observed = steady_instances(rate, service);
    int predicted = rpc::predict_instances(rate, 1.0, 0.010, 4);
    EXPECT_NEAR(observed, predicted, 2) << "rate " << rate;
    EXPECT_GE(observed, previous) << "rate " << rate;
    previous = observed;
  }
}

TEST(Platform, InvalidConfigRejected) {
  PlatformConfig c;
  c.concurrency_level = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = PlatformConfig{};
  c.per_instance_vcpu = 1000.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
