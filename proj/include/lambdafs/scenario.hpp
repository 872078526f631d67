#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lambdafs/client.hpp"
#include "lambdafs/coherence.hpp"
#include "lambdafs/faas_platform.hpp"
#include "lambdafs/metrics_cost.hpp"
#include "lambdafs/namenode.hpp"
#include "lambdafs/namespace_store.hpp"
#include "lambdafs/sim_kernel.hpp"
#include "lambdafs/workload.hpp"

namespace lfs::scenario {

inline constexpr int kSchemaVersion = 1;

enum class WorkloadMode : std::uint8_t { kBursty, kClosed };

struct WorkloadSpec {
  WorkloadMode mode = WorkloadMode::kBursty;
  sim::Duration duration = sim::sec(300);
  // Extra time after `duration` for in-flight operations to finish.
  sim::Duration drain = sim::sec(30);
  // Start of the steady-state window used by post-warm-up statistics.
  sim::Duration warmup = sim::sec(30);
  int n_vms = 8;
  int clients = 1024;
  // Bursty mode.
  sim::Duration interval = sim::sec(15);
  workload::ParetoConfig pareto;
  // Multiplier applied to every interval target.
  double load_scale = 1.0;
  // Closed mode: pause between a completion and the next issue, and an
  // optional on/off duty cycle (off == 0 means always on).
  sim::Duration think_time = 0;
  sim::Duration on_time = 0;
  sim::Duration off_time = 0;
  workload::OpMix mix = workload::OpMix::spotify();
  workload::NamespaceSeed ns;
  // 0 disables fault injection.
  sim::Duration failure_period = 0;
  // First termination time; negative means one period after start.
  sim::Duration failure_offset = -1;

  void validate() const;
};

/// Complete description of one simulation run.
struct Scenario {
  std::string name = "custom";
  std::uint64_t seed = 1;
  sim::LatencyModel latency;
  faas::PlatformConfig platform;
  store::StoreConfig store;
  coherence::CoordinatorConfig coherence;
  nn::NameNodeConfig namenode;
  client::ClientConfig client;
  // 0 means every client on a VM shares a single TCP server.
  int max_clients_per_tcp_server = 0;
  WorkloadSpec workload;
  metrics::CostModel cost;
  // vCPU of the serverful comparison cluster; 0 selects the platform budget.
  double serverful_vcpu = 0.0;

  void validate() const;
  int servers_per_vm() const;
};

/// Configuration problem with an optional source position (1-based; 0 = unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, std::size_t line = 0, std::size_t column = 0);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Parses a JSON scenario document. Missing fields take their defaults;
/// unknown keys, type mismatches and a wrong schema_version are errors.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);
/// Canonical JSON form with every field present.
std::string scenario_to_json(const Scenario& s);

/// Overrides one field given a dotted key ("workload.clients") or a unique
/// leaf name ("clients"); the value is parsed as JSON, falling back to a string.
void apply_override(Scenario& s, const std::string& key, const std::string& value);

std::vector<std::string> bundled_names();
/// Throws ConfigError for an unknown name.
Scenario bundled(const std::string& name);
/// A bundled name or a file path.
Scenario resolve(const std::string& name_or_path);

}  // namespace lfs::scenario
