#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "lambdafs/fs_types.hpp"
#include "lambdafs/namespace_store.hpp"
#include "lambdafs/sim_kernel.hpp"

namespace lfs::workload {

/// Relative operation frequencies in percent, indexed by OpKind.
struct OpMix {
  std::array<double, kOpKindCount> weights{};

  static OpMix spotify();
  static OpMix only(OpKind kind);
  static OpMix read_only();
  double total() const;
  /// Throws std::invalid_argument unless weights are non-negative and sum to 100.
  void validate() const;
  OpKind sample(sim::Rng& rng) const;
};

struct ParetoConfig {
  double alpha = 2.0;
  double scale = 25000.0;
  double cap_multiplier = 7.0;
  bool capped = true;

  void validate() const;
};

/// Inverse-CDF Pareto draw scale * U^(-1/alpha), U in (0, 1].
double pareto_sample(double alpha, double scale, sim::Rng& rng);
/// Per-interval throughput target, clamped to cap_multiplier * scale when capped.
double next_interval_target(const ParetoConfig& cfg, sim::Rng& rng);

/// Per-VM rate ledger: each second adds delta ops of allowance; ops not
/// issued by the end of a second carry into the next.
class RolloverLedger {
 public:
  static double per_vm_rate(double delta, int n_vms);

  void start_second(double delta) { allowance_ += delta; }
  /// Whole ops currently available for issue.
  std::int64_t available() const;
  bool take();
  double carry() const { return allowance_; }
  std::uint64_t issued() const { return issued_; }

 private:
  double allowance_ = 0.0;
  std::uint64_t issued_ = 0;
};

struct NamespaceSeed {
  int depth = 4;
  int fanout = 10;
  int files = 10000;

  void validate() const;
  std::size_t directory_count() const;
};

struct SeededEntry {
  std::string path;
  bool is_dir;
};

/// Pre-populates `store` with a balanced directory tree of depth-1 directory
/// levels and distributes files across the deepest directories.
std::vector<SeededEntry> seed_namespace(store::MetadataStore& store, const NamespaceSeed& seed);

/// Generator-side view of live paths used to pick targets.
class NamespaceMirror {
 public:
  NamespaceMirror();

  void add(const std::string& path, bool is_dir);
  void remove_subtree(const std::string& path);
  void move_subtree(const std::string& src, const std::string& dst);
  bool contains(const std::string& path) const { return entries_.count(path) != 0; }
  bool is_dir(const std::string& path) const;
  std::size_t files() const { return files_.items.size(); }
  std::size_t dirs() const { return dirs_.items.size(); }

  const std::string* random_file(sim::Rng& rng) const;
  const std::string* random_dir(sim::Rng& rng) const;
  /// Any entry other than the root.
  const std::string* random_entry(sim::Rng& rng) const;

 private:
  struct IndexedSet {
    std::vector<std::string> items;
    std::unordered_map<std::string, std::size_t> index;
    void insert(const std::string& s);
    void erase(const std::string& s);
  };
  std::map<std::string, bool> entries_;
  IndexedSet files_;
  IndexedSet dirs_;  // excludes the root
};

/// Draws operation kinds by mix and targets from the mirror.
class OpPicker {
 public:
  OpPicker(OpMix mix, const NamespaceMirror& mirror) : mix_(mix), mirror_(mirror) {}
  /// `fresh` supplies unique names for create/mkdir/mv destinations.
  FsOp pick(sim::Rng& rng, const std::function<std::string()>& fresh) const;
  FsOp pick_kind(OpKind kind, sim::Rng& rng, const std::function<std::string()>& fresh) const;

 private:
  OpMix mix_;
  const NamespaceMirror& mirror_;
};

/// Round-robin fault injection: one termination per period, cycling over
/// deployments and skipping those with no live instance. The first
/// termination happens at `offset`, or one period in when offset is negative.
class FailureSchedule {
 public:
  FailureSchedule(sim::Duration period, sim::Duration duration, int n_deployments, sim::Duration offset = -1);
  std::vector<sim::Time> times() const;
  /// Returns the next deployment with a live instance, or -1 when none has one.
  int next_target(const std::function<bool(int)>& has_live);

 private:
  sim::Duration period_;
  sim::Duration duration_;
  int n_;
  sim::Duration offset_;
  int cursor_ = 0;
};

}  // namespace lfs::workload
