#include <gtest/gtest.h>

#include <vector>

#include "lambdafs/sim_kernel.hpp"

using namespace lfs::sim;

TEST(Simulator, ZeroDelayFiresBeforeLaterEvents) {
  Simulator s;
  std::vector<int> order;
  s.schedule(10, EventKind::kInternal, [&] { order.push_back(2); });
  s.schedule(0, EventKind::kInternal, [&] { order.push_back(1); });
  s.run();
  EXPECT_EQ(order, (std::vector<int>{1, 2}));
}

TEST(Simulator, DelayIsRelativeToNow) {
  Simulator s;
  Time fired = -1;
  s.schedule(500, EventKind::kInternal, [&] {
    s.schedule(1000, EventKind::kInternal, [&] { fired = s.now(); });
  });
  s.run();
  EXPECT_EQ(fired, 1500);
}

TEST(Simulator, EqualTimesDispatchInSchedulingOrder) {
  Simulator s;
  std::vector<int> order;
  for (int i = 0; i < 50; ++i) s.schedule_at(100, EventKind::kInternal, [&order, i] { order.push_back(i); });
  s.run();
  ASSERT_EQ(order.size(), 50u);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(order[static_cast<std::size_t>(i)], i);
}

TEST(Simulator, EmptyRunUntilAdvancesClock) {
  Simulator s;
  EXPECT_EQ(s.run_until(sec(10)), 0u);
  EXPECT_EQ(s.now(), sec(10));
}

TEST(Simulator, CancelledEventNeverFires) {
  Simulator s;
  bool fired = false;
  auto h = s.schedule(5, EventKind::kTimeout, [&] { fired = true; });
  EXPECT_TRUE(s.cancel(h));
  EXPECT_FALSE(s.cancel(h));
  s.run();
  EXPECT_FALSE(fired);
  EXPECT_TRUE(s.empty());
}

TEST(Simulator, ClockIsMonotoneOverAMillionEvents) {
  Simulator s;
  Rng rng(3);
  Time last = 0;
  bool monotone = true;
  std::function<void()> step;
  std::int64_t remaining = 1000000;
  step = [&] {
    if (s.now() < last) monotone = false;
    last = s.now();
    if (--remaining > 0) s.schedule(rng.uniform_int(0, 20), EventKind::kInternal, step);
  };
  for (int i = 0; i < 4; ++i) s.schedule(0, EventKind::kInternal, step);
  s.run();
  EXPECT_TRUE(monotone);
  EXPECT_GE(s.dispatched(), 1000000u);
}

TEST(Simulator, SameScheduleGivesSameDigestAndLog) {
  auto run = [] {
    Simulator s;
    s.set_record_log(true);
    Rng rng(derive_seed(42, 1, 0));
    for (int i = 0; i < 1000; ++i) s.schedule(rng.uniform_int(0, 10000), EventKind::kRpcArrival, [] {});
    s.run();
    return std::make_pair(s.trace_digest(), s.event_log().size());
  };
  auto a = run();
  auto b = run();
  EXPECT_EQ(a, b);
}

TEST(Seeds, DerivedStreamsDifferByActor) {
  EXPECT_NE(derive_seed(1, 4, 0), derive_seed(1, 4, 1));
  EXPECT_NE(derive_seed(1, 4, 0), derive_seed(1, 3, 0));
  EXPECT_EQ(derive_seed(9, 2, 7), derive_seed(9, 2, 7));
}

TEST(LatencyModel, DefaultRangesAndMeans) {
  LatencyModel m;
  Rng rng(11);
  for (auto kind : {LatencyKind::kTcp, LatencyKind::kHttp}) {
    const auto& r = m.range(kind);
    double sum = 0.0;
    Duration lo = r.max;
    Duration hi = r.min;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      Duration v = m.sample(kind, rng);
      sum += static_cast<double>(v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    EXPECT_GE(lo, r.min);
    EXPECT_LE(hi, r.max);
    double mid = (static_cast<double>(r.min) + static_cast<double>(r.max)) / 2.0;
    EXPECT_NEAR(sum / n, mid, 0.02 * mid);
  }
  EXPECT_EQ(m.tcp.min, 1000);
  EXPECT_EQ(m.tcp.max, 2000);
  EXPECT_EQ(m.http.min, 8000);
  EXPECT_EQ(m.http.max, 20000);
}

TEST(LatencyModel, DegenerateRange) {
  LatencyModel m;
  m.tcp = {5000, 5000};
  Rng rng(2);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(m.sample(LatencyKind::kTcp, rng), 5000);
}

TEST(LatencyModel, InvalidRangeRejected) {
  LatencyModel m;
  m.store = {10, 5};
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m.store = {0, 5};
  EXPECT_THROW(m.validate(), std::invalid_argument);
}
