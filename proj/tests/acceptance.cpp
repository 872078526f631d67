#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "harness.hpp"
#include "lambdafs/engine.hpp"
#include "lambdafs/metrics_cost.hpp"
#include "lambdafs/partitioning.hpp"
#include "lambdafs/runner.hpp"
#include "lambdafs/scenario.hpp"
#include "lambdafs/workload.hpp"
#include "tree_builder.hpp"

using namespace lfs;

namespace {

// Pinned tolerances.
constexpr int kFuzzSeeds = 200;
constexpr std::uint64_t kFuzzMinOps = 10000;
constexpr double kFuzzWallLimitS = 300.0;
constexpr double kAblationMinRatio = 2.0;
constexpr double kHttpTarget = 0.01;
constexpr double kHttpTolerance = 0.003;
constexpr std::uint64_t kHttpMinRequests = 100000;
constexpr double kCostExact = 1e-12;
constexpr double kDutyRatioLo = 1.8;
constexpr double kDutyRatioHi = 2.2;
constexpr int kDraws = 1000000;
constexpr double kMixTolerancePct = 0.5;
constexpr double kParetoMeanTolerance = 0.05;
constexpr double kCacheMinHit = 0.95;
constexpr double kReducedFraction = 0.4;
constexpr std::size_t kTreeEntries = 10000;
constexpr int kRecoveryLimitS = 5;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double wall_seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string fuzz_config(std::uint64_t seed) {
  return R"({"schema_version":1,"name":"fuzz","seed":)" + std::to_string(seed) + R"(,
    "workload":{"mode":"closed","duration_s":100,"warmup_s":0,"drain_s":30,"clients":16,"n_vms":2,
      "think_time_ms":100,
      "mix":{"create":15,"mkdir":5,"delete":8,"mv":7,"read":30,"stat":15,"ls":10,"setattr":10},
      "namespace":{"depth":3,"fanout":4,"files":200},"failure_period_s":30,"failure_offset_s":30},
    "platform":{"n_deployments":4}})";
}

void fuzz(Outcome& o) {
  auto t0 = std::chrono::steady_clock::now();
  std::uint64_t min_ops = ~0ull;
  std::size_t stale = 0, lin = 0, other = 0, short_runs = 0, no_crash = 0;
  std::ostringstream bad_seeds;
  for (int i = 0; i < kFuzzSeeds; ++i) {
    auto s = scenario::parse_scenario(fuzz_config(1000 + static_cast<std::uint64_t>(i)));
    auto r = engine::run(s);
    auto rep = runner::verify_result(r);
    min_ops = std::min(min_ops, r.completed);
    if (r.completed < kFuzzMinOps) ++short_runs;
    if (r.terminations.empty()) ++no_crash;
    stale += rep.stale_reads;
    lin += rep.linearizability_violations;
    if (!rep.ok()) {
      ++other;
      bad_seeds << " " << s.seed;
    }
  }
  double wall = wall_seconds(t0);
  o.detail << kFuzzSeeds << " seeds, min ops " << min_ops << ", stale " << stale << ", lin " << lin
           << ", failed reports " << other << ", wall " << wall << " s";
  o.require(short_runs == 0, "every seed completes >= 10^4 ops");
  o.require(no_crash == 0, "every seed injects terminations");
  o.require(stale == 0, "zero stale reads");
  o.require(lin == 0, "zero linearizability violations");
  o.require(other == 0, "all verifier checks pass, failing seeds:" + bad_seeds.str());
  o.require(wall < kFuzzWallLimitS, "under 5 minutes");
}

void ablation(Outcome& o) {
  auto on = scenario::bundled("autoscaling_ablation");
  auto off = on;
  off.platform.max_instances_per_deployment = 1;
  double a = engine::run(on, {false}).avg_read_throughput();
  double b = engine::run(off, {false}).avg_read_throughput();
  double ratio = b > 0 ? a / b : 0.0;
  o.detail << "enabled " << a << " ops/s, disabled " << b << " ops/s, ratio " << ratio;
  o.require(ratio >= kAblationMinRatio, "ratio >= 2.0");
}

void http_fraction(Outcome& o) {
  auto s = scenario::bundled("client_scaling");
  s.client.http_probability = kHttpTarget;
  auto r = engine::run(s, {false});
  double f = r.http_fraction_post_warmup();
  o.detail << r.requests_post_warmup << " post-warm-up requests, http fraction " << f;
  o.require(r.requests_post_warmup >= kHttpMinRequests, ">= 10^5 requests");
  o.require(std::abs(f - kHttpTarget) <= kHttpTolerance, "1.0% +- 0.3%");
}

void cost_arithmetic(Outcome& o) {
  metrics::CostModel m;
  metrics::InstanceUsage u;
  u.mem_gb = 30.0;
  u.busy = {{0, sim::sec(1)}};
  u.provisioned_from = 0;
  u.provisioned_to = sim::sec(1);
  double gbs = metrics::cost_pay_per_use({u}, 0, m);
  double req = metrics::request_fee(1000000, m);
  auto s = scenario::bundled("client_scaling");
  s.workload.duration = sim::sec(40);
  s.workload.warmup = 0;
  s.workload.on_time = sim::sec(10);
  s.workload.off_time = sim::sec(10);
  s.platform.max_instances_per_deployment = 1;
  auto r = engine::run(s, {false});
  double ratio = r.cost_ppu > 0 ? r.cost_simplified / r.cost_ppu : 0.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "30 GB x 1 s = $%.12f, 10^6 requests = $%.12f, 50%% duty simplified/ppu = %.4f", gbs,
                req, ratio);
  o.detail << buf;
  o.require(std::abs(gbs - 0.000500001) <= kCostExact, "GB-second price");
  o.require(std::abs(req - 0.20) <= kCostExact, "request fee");
  o.require(ratio >= kDutyRatioLo && ratio <= kDutyRatioHi, "duty-cycle ratio in [1.8, 2.2]");
}

struct BundledRuns {
  std::map<std::string, std::string> first, second;
  std::map<std::string, std::array<double, 3>> costs;
};

BundledRuns run_bundled_twice() {
  BundledRuns b;
  for (const auto& name : scenario::bundled_names()) {
    auto s = scenario::bundled(name);
    auto r1 = engine::run(s);
    b.first[name] = r1.summary_json();
    b.costs[name] = {r1.cost_ppu, r1.cost_simplified, r1.cost_serverful};
    b.second[name] = engine::run(s).summary_json();
  }
  return b;
}

void cost_ordering(Outcome& o, const BundledRuns& b) {
  for (const auto& [name, c] : b.costs) {
    o.detail << name << " " << c[0] << "/" << c[1] << "/" << c[2] << "; ";
    o.require(c[0] <= c[1] && c[1] <= c[2], name);
  }
}

void determinism(Outcome& o, const BundledRuns& b) {
  std::size_t same = 0;
  for (const auto& [name, j] : b.first) {
    bool eq = j == b.second.at(name);
    same += eq ? 1 : 0;
    o.require(eq, name);
  }
  o.detail << same << "/" << b.first.size() << " scenarios byte-identical";
}

void workload_stats(Outcome& o) {
  auto mix = workload::OpMix::spotify();
  sim::Rng rng(sim::derive_seed(99, 6, 0));
  std::array<std::uint64_t, kOpKindCount> counts{};
  for (int i = 0; i < kDraws; ++i) ++counts[static_cast<std::size_t>(mix.sample(rng))];
  double worst = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    double share = 100.0 * static_cast<double>(counts[k]) / kDraws;
    worst = std::max(worst, std::abs(share - mix.weights[k]));
  }
  workload::ParetoConfig uncapped;
  uncapped.capped = false;
  workload::ParetoConfig capped;
  sim::Rng prng(sim::derive_seed(99, 7, 0));
  double sum = 0.0, cap_max = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    sum += workload::next_interval_target(uncapped, prng);
    cap_max = std::max(cap_max, workload::next_interval_target(capped, prng));
  }
  double mean = sum / kDraws;
  double expected = 2.0 * uncapped.scale;
  o.detail << "worst mix deviation " << worst << "%, uncapped mean " << mean << " vs " << expected << ", capped max "
           << cap_max << " vs " << 7.0 * capped.scale;
  o.require(worst <= kMixTolerancePct, "op mix within 0.5%");
  o.require(std::abs(mean - expected) <= kParetoMeanTolerance * expected, "uncapped mean within 5%");
  o.require(cap_max <= 7.0 * capped.scale, "capped <= 7 x_t");
}

void cache_wss(Outcome& o) {
  auto s = scenario::bundled("reduced_cache");
  s.namenode.cache_capacity = cache::CacheTrie::kUnbounded;
  auto unbounded = engine::run(s, {false});
  std::size_t wss = unbounded.peak_cache_entries;
  s.namenode.cache_capacity = wss;
  auto full = engine::run(s, {false});
  s.namenode.cache_capacity = static_cast<std::size_t>(kReducedFraction * static_cast<double>(wss));
  auto reduced = engine::run(s, {false});
  std::vector<OpKind> reads{OpKind::kRead, OpKind::kStat, OpKind::kLs};
  double lat_full = full.mean_latency(reads);
  double lat_reduced = reduced.mean_latency(reads);
  o.detail << "WSS " << wss << ", hit at WSS " << full.cache_hit_rate_post_warmup() << ", hit at 0.4 WSS "
           << reduced.cache_hit_rate_post_warmup() << ", read latency " << lat_full << " vs " << lat_reduced << " us";
  o.require(full.cache_hit_rate_post_warmup() >= kCacheMinHit, "hit rate >= 95% at WSS");
  o.require(reduced.completed == reduced.issued && reduced.failed == 0, "all ops complete at 0.4 WSS");
  o.require(lat_reduced > lat_full, "read latency strictly higher at 0.4 WSS");
}

void subtree(Outcome& o) {
  for (int k = 1; k <= 4; ++k) {
    testkit::Cluster c;
    auto tree = testkit::build_tree(c.store, "/foo", 4, k, kTreeEntries);
    c.snapshot_initial();
    std::vector<faas::InstanceId> per_dep;
    for (int d = 0; d < 4; ++d) per_dep.push_back(c.start_instance(d));
    int n = 0;
    for (const auto& p : tree.sample) {
      c.call(per_dep[static_cast<std::size_t>(part::deployment_for(p, 4))], testkit::op_of(OpKind::kStat, p),
             "warm" + std::to_string(n++));
    }
    auto leader = per_dep[static_cast<std::size_t>(part::deployment_for("/foo", 4))];
    const std::uint64_t batch = c.nn.config().subtree_batch_size;
    auto inv0 = c.coord.stats().inv_messages;
    auto local0 = c.nn.stats().prefix_invalidations;
    auto batches0 = c.nn.stats().subtree_batches;
    auto st = c.call(leader, testkit::op_of(OpKind::kDelete, "/foo"), "del").status;
    auto invs = (c.coord.stats().inv_messages - inv0) + (c.nn.stats().prefix_invalidations - local0);
    auto batches = c.nn.stats().subtree_batches - batches0;
    std::uint64_t expect_batches = (kTreeEntries - 1 + batch - 1) / batch;
    o.detail << "k=" << k << ": " << invs << " INVs, " << batches << " batches; ";
    o.require(st == FsStatus::kOk, "delete ok k=" + std::to_string(k));
    o.require(invs == static_cast<std::uint64_t>(k), "exactly k INVs k=" + std::to_string(k));
    o.require(batches == expect_batches, "ceil(m/512) batches k=" + std::to_string(k));
    o.require(c.verify().ok(), "verifier k=" + std::to_string(k));
  }
}

void failure(Outcome& o) {
  auto s = scenario::bundled("failure_30s");
  auto r = engine::run(s);
  auto rep = runner::verify_result(r);
  int worst = 0;
  bool all_recovered = !r.terminations.empty();
  for (const auto& t : r.terminations) {
    if (t.recovery_seconds < 0 || t.recovery_seconds > kRecoveryLimitS) all_recovered = false;
    worst = std::max(worst, t.recovery_seconds);
  }
  o.detail << r.completed << "/" << r.issued << " completed, " << r.failed << " failed, " << rep.duplicate_commits
           << " duplicate commits, " << r.terminations.size() << " terminations, worst recovery " << worst << " s";
  o.require(r.issued > 0 && r.completed == r.issued && r.failed == 0 && r.in_flight == 0, "100% complete");
  o.require(rep.duplicate_commits == 0 && rep.ok(), "exactly once");
  o.require(all_recovered, "recovery within 5 s");
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<void(Outcome&)>& fn) {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << name << ": " << o.detail.str() << " ("
              << wall_seconds(t0) << " s)" << std::endl;
  };
  report(1, "fuzz", fuzz);
  report(2, "autoscaling-ablation", ablation);
  report(3, "http-fraction", http_fraction);
  report(4, "cost-arithmetic", cost_arithmetic);
  BundledRuns bundled;
  bool bundled_ok = true;
  try {
    bundled = run_bundled_twice();
  } catch (const std::exception& e) {
    bundled_ok = false;
    std::cout << "bundled runs failed: " << e.what() << std::endl;
  }
  report(5, "cost-ordering", [&](Outcome& o) {
    o.require(bundled_ok, "bundled runs");
    cost_ordering(o, bundled);
  });
  report(6, "workload-statistics", workload_stats);
  report(7, "cache", cache_wss);
  report(8, "subtree-delete", subtree);
  report(9, "failure-30s", failure);
  report(10, "determinism", [&](Outcome& o) {
    o.require(bundled_ok, "bundled runs");
    determinism(o, bundled);
  });
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
