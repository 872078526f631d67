#include "lambdafs/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "lambdafs/metrics_cost.hpp"
#include "lambdafs/trace.hpp"

namespace lfs::runner {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

std::string history_jsonl(const std::vector<verify::HistoryOp>& h) {
  std::ostringstream os;
  verify::write_history(os, h);
  return os.str();
}

std::string trace_jsonl(const trace::ProtocolTrace& t) {
  std::ostringstream os;
  t.write_jsonl(os);
  return os.str();
}

}  // namespace

verify::Report verify_result(const engine::RunResult& r, const verify::Options& opts) {
  return verify::verify_run(r.initial_snapshot, r.final_snapshot, r.trace.events(), r.history, opts);
}

void write_outputs(const engine::RunResult& r, const std::string& dir) {
  fs::path root(dir);
  fs::create_directories(root);
  write_file(root / "scenario.json", scenario::scenario_to_json(r.scenario));
  write_file(root / "summary.json", r.summary_json());
  write_file(root / "throughput.csv", r.series.throughput_csv());
  write_file(root / "platform.csv", r.series.platform_csv(r.scenario.platform.n_deployments));
  write_file(root / "latency_cdf_all.csv", metrics::cdf_csv(r.series.all_latencies()));
  for (int k = 0; k < kOpKindCount; ++k) {
    const auto& samples = r.series.latencies(static_cast<OpKind>(k));
    if (samples.empty()) continue;
    write_file(root / ("latency_cdf_" + std::string(to_string(static_cast<OpKind>(k))) + ".csv"), metrics::cdf_csv(samples));
  }
  write_file(root / "requests.csv", r.requests_csv());
  write_file(root / "history.jsonl", history_jsonl(r.history));
  write_file(root / "trace.jsonl", trace_jsonl(r.trace));
  write_file(root / "snapshot_initial.jsonl", r.initial_snapshot_jsonl);
  write_file(root / "snapshot_final.jsonl", r.final_snapshot_jsonl);
}

RunOutcome run_to_dir(const scenario::Scenario& s, const std::string& dir, bool verify) {
  RunOutcome out;
  out.result = engine::run(s, engine::RunOptions{true});
  write_outputs(out.result, dir);
  if (verify) {
    out.report = verify_result(out.result);
    write_file(fs::path(dir) / "verify_report.json", out.report.to_json());
    if (!out.report.ok()) out.exit_code = kExitVerify;
  }
  return out;
}

std::vector<std::string> expand_values(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(item);
      continue;
    }
    double lo = 0.0;
    double hi = 0.0;
    try {
      lo = std::stod(item.substr(0, dots));
      hi = std::stod(item.substr(dots + 2));
    } catch (const std::exception&) {
      throw scenario::ConfigError("bad range '" + item + "'");
    }
    if (lo <= 0.0 || hi < lo) throw scenario::ConfigError("bad range '" + item + "'");
    for (double v = lo; v <= hi * (1.0 + 1e-12); v *= 2.0) {
      char buf[64];
      if (std::floor(v) == v) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
      } else {
        std::snprintf(buf, sizeof buf, "%g", v);
      }
      out.emplace_back(buf);
    }
  }
  if (out.empty()) throw scenario::ConfigError("no sweep values in '" + list + "'");
  return out;
}

std::string SweepResult::csv() const {
  std::ostringstream os;
  os << key
     << ",avg_ops_per_s,avg_read_ops_per_s,mean_latency_us,p99_latency_us,cost_ppu,cost_simplified,cost_serverful,"
        "peak_instances,verified\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.3f,%.3f,%.1f,%lld,%.9f,%.9f,%.9f,%d,%s\n", r.avg_ops, r.avg_read_ops,
                  r.mean_latency_us, static_cast<long long>(r.p99_us), r.cost_ppu, r.cost_simplified, r.cost_serverful,
                  r.peak_instances, r.verified ? "true" : "false");
    os << r.value << buf;
  }
  return os.str();
}

bool SweepResult::all_verified() const {
  return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.verified; });
}

SweepResult sweep(const scenario::Scenario& base, const std::string& key, const std::vector<std::string>& values,
                  const std::string& dir, int parallel, bool verify) {
  std::vector<scenario::Scenario> runs;
  for (const auto& v : values) {
    scenario::Scenario s = base;
    scenario::apply_override(s, key, v);
    runs.push_back(std::move(s));
  }
  SweepResult result;
  result.key = key;
  result.rows.resize(runs.size());
  fs::create_directories(dir);
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::string first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      try {
        SweepRow& row = result.rows[i];
        row.value = values[i];
        row.dir = (fs::path(dir) / (key + "=" + values[i])).string();
        RunOutcome o = run_to_dir(runs[i], row.dir, verify);
        const auto& r = o.result;
        row.avg_ops = r.avg_throughput();
        row.avg_read_ops = r.avg_read_throughput();
        auto all = r.series.all_latencies();
        auto q = metrics::latency_cdf(all);
        row.mean_latency_us = q.mean;
        row.p99_us = q.p99;
        row.cost_ppu = r.cost_ppu;
        row.cost_simplified = r.cost_simplified;
        row.cost_serverful = r.cost_serverful;
        for (const auto& b : r.series.buckets()) row.peak_instances = std::max(row.peak_instances, b.instances);
        row.verified = !verify || o.report.ok();
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };
  int threads = std::max(1, std::min<int>(parallel, static_cast<int>(runs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (!first_error.empty()) throw std::runtime_error(first_error);
  write_file(fs::path(dir) / "sweep.csv", result.csv());
  return result;
}

int verify_dir(const std::string& dir, std::ostream& out, std::ostream& err) {
  fs::path root(dir);
  const char* required[] = {"trace.jsonl", "history.jsonl", "snapshot_initial.jsonl", "snapshot_final.jsonl"};
  for (const char* name : required) {
    if (!fs::exists(root / name)) {
      err << "verify: missing " << (root / name).string() << " (run directories are produced by 'run')\n";
      return kExitConfig;
    }
  }
  verify::Report report;
  try {
    std::ifstream t(root / "trace.jsonl");
    std::ifstream h(root / "history.jsonl");
    std::ifstream a(root / "snapshot_initial.jsonl");
    std::ifstream b(root / "snapshot_final.jsonl");
    auto trace = trace::ProtocolTrace::read_jsonl(t);
    auto history = verify::read_history(h);
    auto initial = verify::read_snapshot(a);
    auto final_state = verify::read_snapshot(b);
    report = verify::verify_run(initial, final_state, trace.events(), history);
  } catch (const std::exception& e) {
    err << "verify: cannot read run directory " << dir << ": " << e.what() << "\n";
    return kExitConfig;
  }
  write_file(root / "verify_report.json", report.to_json());
  out << "reference replay:     " << (report.tree_matches && report.replay_errors == 0 ? "pass" : "FAIL") << "\n";
  out << "linearizability:      " << (report.linearizability_violations == 0 ? "pass" : "FAIL") << " ("
      << report.paths_checked << " paths, " << report.inconclusive_segments << " inconclusive segments)\n";
  out << "stale reads:          " << (report.stale_reads == 0 ? "pass" : "FAIL") << " (" << report.reads_checked
      << " reads checked)\n";
  out << "subtree isolation:    " << (report.subtree_isolation_violations == 0 ? "pass" : "FAIL") << "\n";
  out << "exactly-once commits: " << (report.duplicate_commits == 0 ? "pass" : "FAIL") << "\n";
  out << "commit barrier:       " << (report.barrier_violations == 0 ? "pass" : "FAIL") << "\n";
  if (!report.tree_matches) out << "first divergence: " << report.first_divergence << "\n";
  for (const auto& v : report.violations) out << "  " << v.check << ": " << v.detail << "\n";
  return report.ok() ? kExitOk : kExitVerify;
}

}  // namespace lfs::runner
