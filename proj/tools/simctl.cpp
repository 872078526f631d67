#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lambdafs/runner.hpp"
#include "lambdafs/scenario.hpp"

namespace {

using lfs::scenario::ConfigError;
using lfs::scenario::Scenario;

struct Common {
  std::string scenario;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::vector<std::string> inject;
  std::vector<std::string> params;
};

std::pair<std::string, std::string> split_param(const std::string& p) {
  auto eq = p.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects key=value, got '" + p + "'");
  return {p.substr(0, eq), p.substr(eq + 1)};
}

Scenario prepare(const Common& c, CLI::Option* seed_opt) {
  Scenario s = lfs::scenario::resolve(c.scenario);
  if (seed_opt->count() > 0) s.seed = c.seed;
  for (const auto& f : c.inject) {
    if (f == "stale-read") {
      s.namenode.inject_stale_read = true;
    } else {
      throw ConfigError("unknown --inject fault '" + f + "' (known: stale-read)");
    }
  }
  return s;
}

void print_summary(const lfs::runner::RunOutcome& o, bool verified) {
  const auto& r = o.result;
  std::cout << "scenario " << r.scenario.name << " seed " << r.scenario.seed << ": " << r.completed << "/" << r.issued
            << " ops completed, " << r.avg_throughput() << " ops/s, pay-per-use $" << r.cost_ppu << "\n";
  if (verified) std::cout << "verification: " << (o.report.ok() ? "pass" : "FAIL") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event simulator for a serverless file system metadata service"};
  app.require_subcommand(1);

  Common run_args;
  auto* run = app.add_subcommand("run", "Run one scenario and write its outputs");
  run->add_option("scenario", run_args.scenario, "Bundled scenario name or JSON file")->required();
  auto* run_seed = run->add_option("--seed", run_args.seed, "Master seed");
  run->add_option("--out", run_args.out, "Output directory")->default_val("out");
  run->add_option("--inject", run_args.inject, "Debug fault to inject (stale-read)");
  run->add_option("--param", run_args.params, "Override key=value (repeatable)");
  bool no_verify = false;
  run->add_flag("--no-verify", no_verify, "Skip verification");

  Common sweep_args;
  int parallel = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* sweep = app.add_subcommand("sweep", "Run one scenario per parameter value");
  sweep->add_option("scenario", sweep_args.scenario, "Bundled scenario name or JSON file")->required();
  auto* sweep_seed = sweep->add_option("--seed", sweep_args.seed, "Master seed");
  sweep->add_option("--out", sweep_args.out, "Output directory")->default_val("sweep_out");
  sweep->add_option("--inject", sweep_args.inject, "Debug fault to inject (stale-read)");
  sweep->add_option("--param", sweep_args.params, "Swept key=v1,v2,... or key=a..b; further key=value fix fields")
      ->required();
  sweep->add_option("--parallel", parallel, "Concurrent runs");
  bool sweep_no_verify = false;
  sweep->add_flag("--no-verify", sweep_no_verify, "Skip verification");

  std::string verify_dir;
  auto* verify = app.add_subcommand("verify", "Re-run verification on a run directory");
  verify->add_option("dir", verify_dir, "Run output directory")->required();

  auto* list = app.add_subcommand("list", "List bundled scenarios");

  std::string show_name;
  auto* show = app.add_subcommand("show", "Print a scenario with every field filled in");
  show->add_option("scenario", show_name, "Bundled scenario name or JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return lfs::runner::kExitConfig;
  }

  try {
    if (*list) {
      for (const auto& n : lfs::scenario::bundled_names()) std::cout << n << "\n";
      return lfs::runner::kExitOk;
    }
    if (*show) {
      std::cout << lfs::scenario::scenario_to_json(lfs::scenario::resolve(show_name));
      return lfs::runner::kExitOk;
    }
    if (*verify) return lfs::runner::verify_dir(verify_dir, std::cout, std::cerr);
    if (*run) {
      Scenario s = prepare(run_args, run_seed);
      for (const auto& p : run_args.params) {
        auto [k, v] = split_param(p);
        lfs::scenario::apply_override(s, k, v);
      }
      auto outcome = lfs::runner::run_to_dir(s, run_args.out, !no_verify);
      print_summary(outcome, !no_verify);
      std::cout << "outputs written to " << run_args.out << "\n";
      return outcome.exit_code;
    }
    if (*sweep) {
      Scenario s = prepare(sweep_args, sweep_seed);
      std::string key;
      std::vector<std::string> values;
      for (const auto& p : sweep_args.params) {
        auto [k, v] = split_param(p);
        auto expanded = lfs::runner::expand_values(v);
        if (expanded.size() > 1 && key.empty()) {
          key = k;
          values = std::move(expanded);
        } else if (expanded.size() == 1) {
          lfs::scenario::apply_override(s, k, v);
        } else {
          throw ConfigError("only one swept parameter is supported");
        }
      }
      if (key.empty()) {
        auto [k, v] = split_param(sweep_args.params.front());
        key = k;
        values = {v};
      }
      auto result = lfs::runner::sweep(s, key, values, sweep_args.out, parallel, !sweep_no_verify);
      std::cout << result.csv();
      return result.all_verified() ? lfs::runner::kExitOk : lfs::runner::kExitVerify;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return lfs::runner::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lfs::runner::kExitError;
  }
  return lfs::runner::kExitOk;
}
