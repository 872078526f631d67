#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lambdafs/client.hpp"
#include "lambdafs/coherence.hpp"
#include "lambdafs/faas_platform.hpp"
#include "lambdafs/metrics_cost.hpp"
#include "lambdafs/namenode.hpp"
#include "lambdafs/namespace_store.hpp"
#include "lambdafs/scenario.hpp"
#include "lambdafs/trace.hpp"
#include "lambdafs/verify.hpp"

namespace lfs::engine {

struct RunOptions {
  // Keep the protocol trace, history and snapshots needed by the verifier.
  bool record_trace = true;
};

struct Termination {
  sim::Time at = 0;
  int deployment = -1;
  faas::InstanceId instance = faas::kNoInstance;
  // Ops completed in the five seconds before `at`, averaged per second.
  double baseline = 0.0;
  // Seconds after `at` until a bucket reached 90% of the baseline; -1 if never.
  int recovery_seconds = -1;
};

/// Transport details of one history entry.
struct RequestMeta {
  client::Channel via = client::Channel::kTcp;
  int attempts = 0;
  int resubmits = 0;
  sim::Duration gateway_wait = 0;
};

/// Everything a finished run produced.
struct RunResult {
  scenario::Scenario scenario;
  sim::Time end = 0;

  // Operation accounting.
  std::uint64_t issued = 0;
  std::uint64_t completed = 0;
  std::uint64_t failed = 0;
  std::uint64_t in_flight = 0;
  std::array<std::uint64_t, kOpKindCount> completed_by_kind{};
  std::map<std::string, std::uint64_t> status_counts;

  // Requests sent by clients at or after the warm-up point.
  std::uint64_t requests_post_warmup = 0;
  std::uint64_t http_post_warmup = 0;
  std::uint64_t cache_hits_post_warmup = 0;
  std::uint64_t cache_misses_post_warmup = 0;
  std::size_t peak_cache_entries = 0;

  double cost_ppu = 0.0;
  double cost_simplified = 0.0;
  double cost_serverful = 0.0;
  std::uint64_t billed_requests = 0;

  std::vector<Termination> terminations;

  metrics::MetricSeries series;
  client::ClientStats client_stats;
  nn::NameNodeStats nn_stats;
  faas::Platform::Stats platform_stats;
  coherence::Coordinator::Stats coord_stats;
  store::MetadataStore::Stats store_stats;
  std::uint64_t events_dispatched = 0;
  std::uint64_t event_digest = 0;

  // Verification inputs (empty unless RunOptions::record_trace).
  std::vector<store::INodeRecord> initial_snapshot;
  std::vector<store::INodeRecord> final_snapshot;
  std::string initial_snapshot_jsonl;
  std::string final_snapshot_jsonl;
  trace::ProtocolTrace trace;
  std::vector<verify::HistoryOp> history;
  // Parallel to `history`.
  std::vector<RequestMeta> request_meta;

  double http_fraction_post_warmup() const;
  double cache_hit_rate_post_warmup() const;
  /// Completed ops per second over [start, end) measured in whole seconds.
  double throughput(sim::Time start, sim::Time end) const;
  double avg_throughput() const;
  double avg_read_throughput() const;
  /// Mean latency in microseconds of completed ops of the given kinds.
  double mean_latency(const std::vector<OpKind>& kinds) const;

  std::string summary_json() const;
  std::string requests_csv() const;
};

/// Builds every component for `s`, runs the workload to completion and
/// collects the outputs.
RunResult run(const scenario::Scenario& s, const RunOptions& opts = {});

}  // namespace lfs::engine
