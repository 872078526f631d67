#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lambdafs/runner.hpp"
#include "lambdafs/scenario.hpp"

using namespace lfs;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"({"schema_version":1,"name":"tiny","seed":3,
 "workload":{"mode":"closed","duration_s":10,"warmup_s":2,"drain_s":5,"clients":8,"n_vms":2,"think_time_ms":20,
   "mix":{"create":10,"mkdir":2,"delete":3,"mv":2,"read":40,"stat":20,"ls":8,"setattr":15},
   "namespace":{"depth":2,"fanout":3,"files":30}}})";

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("lfs_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& body) {
  std::ofstream(p) << body;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int code = -1;
  std::string err;
};

CliResult simctl(const std::string& args, const fs::path& dir) {
  fs::path err = dir / "stderr.txt";
  std::string cmd = std::string(LFS_SIMCTL_PATH) + " " + args + " >" + (dir / "stdout.txt").string() + " 2>" + err.string();
  int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

}  // namespace

TEST(ScenarioConfig, MalformedJsonReportsLineAndColumn) {
  try {
    scenario::parse_scenario("{\n  \"seed\": ,\n}");
    FAIL() << "expected ConfigError";
  } catch (const scenario::ConfigError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_GT(e.column(), 0u);
  }
}

TEST(ScenarioConfig, UnknownKeysAndBadValuesRejected) {
  EXPECT_THROW(scenario::parse_scenario(R"({"schema_version":1,"bogus":1})"), scenario::ConfigError);
  EXPECT_THROW(scenario::parse_scenario(R"({"schema_version":2})"), scenario::ConfigError);
  EXPECT_THROW(scenario::parse_scenario(R"({"schema_version":1,"seed":"x"})"), scenario::ConfigError);
  EXPECT_THROW(scenario::parse_scenario(R"({"schema_version":1,"workload":{"clients":0}})"), scenario::ConfigError);
  EXPECT_THROW(scenario::bundled("no_such_scenario"), scenario::ConfigError);
}

TEST(ScenarioConfig, CanonicalJsonRoundTrips) {
  for (const auto& name : scenario::bundled_names()) {
    auto s = scenario::bundled(name);
    auto text = scenario::scenario_to_json(s);
    EXPECT_EQ(scenario::scenario_to_json(scenario::parse_scenario(text)), text) << name;
  }
  EXPECT_EQ(scenario::bundled_names().size(), 7u);
}

TEST(ScenarioConfig, OverridesByDottedAndLeafKey) {
  auto s = scenario::parse_scenario(kTiny);
  scenario::apply_override(s, "workload.clients", "32");
  EXPECT_EQ(s.workload.clients, 32);
  scenario::apply_override(s, "http_probability", "0.05");
  EXPECT_DOUBLE_EQ(s.client.http_probability, 0.05);
  EXPECT_THROW(scenario::apply_override(s, "nonexistent_key", "1"), scenario::ConfigError);
}

TEST(Sweep, DoublingRangeExpands) {
  auto v = runner::expand_values("8..1024");
  EXPECT_EQ(v, (std::vector<std::string>{"8", "16", "32", "64", "128", "256", "512", "1024"}));
  EXPECT_EQ(runner::expand_values("1,2,5").size(), 3u);
  EXPECT_EQ(runner::expand_values("7").size(), 1u);
}

TEST(Sweep, ClientsEightTo1024GivesEightRows) {
  auto dir = scratch("sweep");
  auto s = scenario::parse_scenario(kTiny);
  s.workload.duration = sim::sec(3);
  s.workload.warmup = sim::sec(1);
  s.workload.think_time = sim::msec(1000);
  s.workload.ns.files = 2000;
  auto r = runner::sweep(s, "clients", runner::expand_values("8..1024"), dir.string(), 2);
  ASSERT_EQ(r.rows.size(), 8u);
  EXPECT_TRUE(r.all_verified());
  EXPECT_TRUE(fs::exists(dir / "sweep.csv"));
  std::istringstream csv(r.csv());
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 9);
  fs::remove_all(dir);
}

TEST(Simctl, MalformedConfigExitsTwoWithPosition) {
  auto dir = scratch("bad");
  auto cfg = write_file(dir / "bad.json", "{\n  \"seed\": ,\n}");
  auto r = simctl("run " + cfg.string() + " --out " + (dir / "o").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("column"), std::string::npos) << r.err;
  fs::remove_all(dir);
}

TEST(Simctl, MissingTraceExitsTwo) {
  auto dir = scratch("missing");
  auto r = simctl("verify " + (dir / "nothing").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("trace.jsonl"), std::string::npos) << r.err;
  fs::remove_all(dir);
}

TEST(Simctl, UnknownSubcommandExitsTwo) {
  auto dir = scratch("usage");
  EXPECT_EQ(simctl("frobnicate", dir).code, 2);
  fs::remove_all(dir);
}

TEST(Simctl, InjectedStaleReadExitsThree) {
  auto dir = scratch("inject");
  auto cfg = write_file(dir / "tiny.json", kTiny);
  auto r = simctl("run " + cfg.string() + " --inject stale-read --out " + (dir / "o").string(), dir);
  EXPECT_EQ(r.code, 3);
  auto report = nlohmann::json::parse(slurp(dir / "o" / "verify_report.json"));
  EXPECT_GT(report["stale_reads"].get<int>(), 0);
  EXPECT_EQ(simctl("verify " + (dir / "o").string(), dir).code, 3);
  fs::remove_all(dir);
}

TEST(Simctl, CliMatchesLibraryByteForByte) {
  auto dir = scratch("same");
  auto cfg = write_file(dir / "tiny.json", kTiny);
  auto r = simctl("run " + cfg.string() + " --param clients=12 --out " + (dir / "cli").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  auto s = scenario::load_scenario_file(cfg.string());
  scenario::apply_override(s, "clients", "12");
  auto lib = runner::run_to_dir(s, (dir / "lib").string());
  EXPECT_EQ(lib.exit_code, 0);
  for (const char* f : {"summary.json", "throughput.csv", "requests.csv", "trace.jsonl", "verify_report.json"}) {
    EXPECT_EQ(slurp(dir / "cli" / f), slurp(dir / "lib" / f)) << f;
  }
  EXPECT_EQ(simctl("verify " + (dir / "cli").string(), dir).code, 0);
  fs::remove_all(dir);
}

TEST(Simctl, ListAndShow) {
  auto dir = scratch("list");
  ASSERT_EQ(simctl("list", dir).code, 0);
  auto out = slurp(dir / "stdout.txt");
  for (const auto& n : scenario::bundled_names()) EXPECT_NE(out.find(n), std::string::npos) << n;
  ASSERT_EQ(simctl("show failure_30s", dir).code, 0);
  auto shown = scenario::parse_scenario(slurp(dir / "stdout.txt"));
  EXPECT_EQ(shown.name, "failure_30s");
  fs::remove_all(dir);
}
