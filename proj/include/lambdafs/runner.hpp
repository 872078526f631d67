#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lambdafs/engine.hpp"
#include "lambdafs/scenario.hpp"
#include "lambdafs/verify.hpp"

namespace lfs::runner {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitConfig = 2, kExitVerify = 3 };

/// Runs the verifier over an in-memory result.
verify::Report verify_result(const engine::RunResult& r, const verify::Options& opts = {});

/// Writes every output file of a run into `dir` (created if needed).
void write_outputs(const engine::RunResult& r, const std::string& dir);

struct RunOutcome {
  engine::RunResult result;
  verify::Report report;
  int exit_code = kExitOk;
};

/// Simulates `s`, writes its outputs and verification report to `dir`.
/// The exit code is kExitVerify when verification fails.
RunOutcome run_to_dir(const scenario::Scenario& s, const std::string& dir, bool verify = true);

/// Expands "v1,v2,..." and doubling ranges "a..b" (a, 2a, 4a, ... <= b).
std::vector<std::string> expand_values(const std::string& list);

struct SweepRow {
  std::string value;
  std::string dir;
  double avg_ops = 0.0;
  double avg_read_ops = 0.0;
  double mean_latency_us = 0.0;
  std::int64_t p99_us = 0;
  double cost_ppu = 0.0;
  double cost_simplified = 0.0;
  double cost_serverful = 0.0;
  int peak_instances = 0;
  bool verified = true;
};

struct SweepResult {
  std::string key;
  std::vector<SweepRow> rows;
  std::string csv() const;
  bool all_verified() const;
};

/// One run per value of `key`, each in its own subdirectory of `dir`, using up
/// to `parallel` worker threads. Writes the combined table to dir/sweep.csv.
SweepResult sweep(const scenario::Scenario& base, const std::string& key, const std::vector<std::string>& values,
                  const std::string& dir, int parallel, bool verify = true);

/// Re-verifies a run directory. Returns kExitConfig on missing or unreadable
/// inputs (diagnostic on `err`), kExitVerify on failure, kExitOk otherwise.
int verify_dir(const std::string& dir, std::ostream& out, std::ostream& err);

}  // namespace lfs::runner
