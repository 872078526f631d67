#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lambdafs/fs_types.hpp"
#include "lambdafs/namespace_store.hpp"
#include "lambdafs/sim_kernel.hpp"
#include "lambdafs/trace.hpp"

namespace lfs::verify {

/// One client-visible operation. `response` is -1 when the client never
/// learned the outcome (gave up or still in flight at the end of the run).
struct HistoryOp {
  std::string request_id;
  std::uint64_t client = 0;
  FsOp op;
  sim::Time invoke = 0;
  sim::Time response = -1;
  OpResult result;

  bool known() const { return response >= 0 && result.status != FsStatus::kGiveUp; }
};

std::string to_json_line(const HistoryOp& h);
HistoryOp history_from_json_line(const std::string& line);
void write_history(std::ostream& os, const std::vector<HistoryOp>& history);
std::vector<HistoryOp> read_history(std::istream& is);
std::vector<store::INodeRecord> read_snapshot(std::istream& is);

struct Options {
  bool linearizability = true;
  // Segments with more concurrent operations than this are reported as inconclusive.
  std::size_t max_segment_ops = 62;
  std::uint64_t max_search_states = 2000000;
  std::size_t max_reported = 50;
};

struct Violation {
  std::string check;
  std::string detail;
};

struct Report {
  std::size_t history_ops = 0;
  std::size_t incomplete_ops = 0;
  std::size_t commits = 0;
  std::size_t paths_checked = 0;
  std::size_t segments = 0;
  std::size_t inconclusive_segments = 0;
  std::size_t reads_checked = 0;
  std::size_t stale_reads = 0;
  std::size_t linearizability_violations = 0;
  std::size_t subtree_isolation_violations = 0;
  std::size_t duplicate_commits = 0;
  std::size_t barrier_violations = 0;
  std::size_t replay_errors = 0;
  bool tree_matches = true;
  std::string first_divergence;
  std::vector<Violation> violations;

  bool ok() const {
    return stale_reads == 0 && linearizability_violations == 0 && subtree_isolation_violations == 0 &&
           duplicate_commits == 0 && barrier_violations == 0 && replay_errors == 0 && tree_matches;
  }
  std::string to_json() const;
};

/// Checks a finished run: reference-tree replay of the commit trace against
/// the final snapshot, per-path linearizability, stale reads, subtree
/// isolation, exactly-once commits and the invalidate-before-commit barrier.
Report verify_run(const std::vector<store::INodeRecord>& initial, const std::vector<store::INodeRecord>& final_state,
                  const std::vector<trace::TraceEvent>& trace, const std::vector<HistoryOp>& history,
                  const Options& opts = {});

}  // namespace lfs::verify
