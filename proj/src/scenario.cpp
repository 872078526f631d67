#include "lambdafs/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lfs::scenario {

using nlohmann::json;
using nlohmann::ordered_json;

// ---- validation ------------------------------------------------------------

void WorkloadSpec::validate() const {
  if (duration <= 0) throw std::invalid_argument("workload duration must be positive");
  if (drain < 0 || warmup < 0) throw std::invalid_argument("drain and warmup must be >= 0");
  if (n_vms < 1) throw std::invalid_argument("n_vms must be >= 1");
  if (clients < 1) throw std::invalid_argument("clients must be >= 1");
  if (interval <= 0) throw std::invalid_argument("interval must be positive");
  if (load_scale < 0.0) throw std::invalid_argument("load_scale must be >= 0");
  if (think_time < 0 || on_time < 0 || off_time < 0) throw std::invalid_argument("closed-loop timings must be >= 0");
  if (off_time > 0 && on_time <= 0) throw std::invalid_argument("an off period needs a positive on period");
  if (failure_period < 0) throw std::invalid_argument("failure period must be >= 0");
  pareto.validate();
  mix.validate();
  ns.validate();
}

void Scenario::validate() const {
  latency.validate();
  platform.validate();
  client.validate();
  workload.validate();
  cost.validate();
  if (max_clients_per_tcp_server < 0) throw std::invalid_argument("max_clients_per_tcp_server must be >= 0");
  if (serverful_vcpu < 0.0) throw std::invalid_argument("serverful_vcpu must be >= 0");
  if (namenode.subtree_batch_size < 1) throw std::invalid_argument("subtree batch size must be >= 1");
  if (namenode.result_cache_ttl < 0) throw std::invalid_argument("result cache ttl must be >= 0");
  if (store.lock_wait_timeout <= 0) throw std::invalid_argument("lock wait timeout must be positive");
  if (coherence.round_timeout <= 0) throw std::invalid_argument("round timeout must be positive");
}

int Scenario::servers_per_vm() const {
  if (max_clients_per_tcp_server <= 0) return 1;
  int per_vm = (workload.clients + workload.n_vms - 1) / workload.n_vms;
  return std::max(1, (per_vm + max_clients_per_tcp_server - 1) / max_clients_per_tcp_server);
}

ConfigError::ConfigError(const std::string& msg, std::size_t line, std::size_t column)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg
                                  : msg),
      line_(line),
      column_(column) {}

// ---- JSON binding ----------------------------------------------------------

namespace {

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

/// Position of the last component of a key path, found by scanning for each
/// quoted component in turn.
std::pair<std::size_t, std::size_t> locate(const std::string& text, const std::vector<std::string>& keys) {
  std::size_t pos = 0;
  bool found = false;
  for (const auto& k : keys) {
    std::size_t hit = text.find("\"" + k + "\"", pos);
    if (hit == std::string::npos) break;
    pos = hit;
    found = true;
  }
  if (!found) return {0, 0};
  return line_col(text, pos);
}

std::string dotted(const std::vector<std::string>& keys) {
  std::string out;
  for (const auto& k : keys) {
    if (!out.empty()) out += '.';
    out += k;
  }
  return out;
}

class Reader {
 public:
  Reader(const json& obj, std::vector<std::string> where, const std::string& text)
      : obj_(obj), where_(std::move(where)), text_(text) {
    if (!obj_.is_object()) fail(where_, "expected an object");
  }

  [[noreturn]] void fail(const std::vector<std::string>& keys, const std::string& msg) const {
    auto [line, col] = locate(text_, keys);
    std::string name = dotted(keys);
    throw ConfigError(name.empty() ? msg : name + ": " + msg, line, col);
  }

  std::vector<std::string> path(const std::string& key) const {
    auto p = where_;
    p.push_back(key);
    return p;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  template <typename T>
  bool get(const std::string& key, T& out) {
    const json* v = find(key);
    if (v == nullptr) return false;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) fail(path(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) fail(path(key), "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0) {
            fail(path(key), "expected a non-negative integer");
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) fail(path(key), "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) fail(path(key), "expected a string");
      }
      out = v->get<T>();
    } catch (const json::exception& e) {
      fail(path(key), e.what());
    }
    return true;
  }

  /// Seconds (possibly fractional) into microseconds.
  bool seconds(const std::string& key, sim::Duration& out) {
    double v = 0.0;
    if (!get(key, v)) return false;
    out = static_cast<sim::Duration>(std::llround(v * 1e6));
    return true;
  }

  bool millis(const std::string& key, sim::Duration& out) {
    double v = 0.0;
    if (!get(key, v)) return false;
    out = static_cast<sim::Duration>(std::llround(v * 1e3));
    return true;
  }

  bool range(const std::string& key, sim::LatencyRange& out) {
    const json* v = find(key);
    if (v == nullptr) return false;
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number_integer() || !(*v)[1].is_number_integer()) {
      fail(path(key), "expected [min_us, max_us]");
    }
    out.min = (*v)[0].get<sim::Duration>();
    out.max = (*v)[1].get<sim::Duration>();
    return true;
  }

  template <typename Fn>
  void child(const std::string& key, Fn fn) {
    const json* v = find(key);
    if (v == nullptr) return;
    Reader r(*v, path(key), text_);
    fn(r);
    r.finish();
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (seen_.count(it.key()) == 0) fail(path(it.key()), "unknown key");
    }
  }

  const json& raw() const { return obj_; }

 private:
  const json& obj_;
  std::vector<std::string> where_;
  const std::string& text_;
  std::set<std::string> seen_;
};

WorkloadMode mode_from_string(const std::string& s, Reader& r) {
  if (s == "bursty") return WorkloadMode::kBursty;
  if (s == "closed") return WorkloadMode::kClosed;
  r.fail(r.path("mode"), "expected \"bursty\" or \"closed\"");
}

int autoscaling_limit(const std::string& s, Reader& r) {
  if (s == "enabled") return 0;
  if (s == "limited") return 3;
  if (s == "disabled") return 1;
  r.fail(r.path("autoscaling"), "expected \"enabled\", \"limited\" or \"disabled\"");
}

void read_scenario(Reader& top, Scenario& s) {
  int version = 0;
  if (!top.get("schema_version", version)) top.fail({}, "missing schema_version");
  if (version != kSchemaVersion) {
    top.fail({"schema_version"}, "unsupported schema_version " + std::to_string(version) + " (expected " +
                                     std::to_string(kSchemaVersion) + ")");
  }
  top.get("name", s.name);
  top.get("seed", s.seed);
  top.child("latency", [&](Reader& r) {
    r.range("tcp_us", s.latency.tcp);
    r.range("http_us", s.latency.http);
    r.range("store_us", s.latency.store);
    r.range("cold_start_us", s.latency.cold_start);
  });
  top.child("platform", [&](Reader& r) {
    auto& p = s.platform;
    r.get("n_deployments", p.n_deployments);
    r.get("concurrency_level", p.concurrency_level);
    r.get("vcpu_budget", p.vcpu_budget);
    r.get("per_instance_vcpu", p.per_instance_vcpu);
    r.get("mem_gb", p.mem_gb);
    r.seconds("idle_timeout_s", p.idle_timeout);
    r.seconds("reclaim_tick_s", p.reclaim_tick);
    bool explicit_limit = r.get("max_instances_per_deployment", p.max_instances_per_deployment);
    std::string mode;
    if (r.get("autoscaling", mode)) {
      if (explicit_limit) r.fail(r.path("autoscaling"), "conflicts with max_instances_per_deployment");
      p.max_instances_per_deployment = autoscaling_limit(mode, r);
    }
    r.get("evict_to_admit", p.evict_to_admit);
  });
  top.child("store", [&](Reader& r) {
    r.millis("lock_wait_timeout_ms", s.store.lock_wait_timeout);
    r.seconds("orphan_reclaim_after_s", s.store.orphan_reclaim_after);
  });
  top.child("coherence", [&](Reader& r) { r.seconds("round_timeout_s", s.coherence.round_timeout); });
  top.child("namenode", [&](Reader& r) {
    auto& n = s.namenode;
    std::size_t capacity = 0;
    if (r.get("cache_capacity", capacity)) n.cache_capacity = capacity == 0 ? cache::CacheTrie::kUnbounded : capacity;
    r.seconds("result_cache_ttl_s", n.result_cache_ttl);
    r.child("cpu_cost_us", [&](Reader& c) {
      for (int k = 0; k < kOpKindCount; ++k) c.get(std::string(to_string(static_cast<OpKind>(k))), n.cpu_cost[static_cast<std::size_t>(k)]);
    });
    r.get("result_cache_cpu_us", n.result_cache_cpu);
    r.get("subtree_batch_size", n.subtree_batch_size);
    r.get("per_row_cost_us", n.per_row_cost);
    r.get("max_revalidations", n.max_revalidations);
    r.get("inject_stale_read", n.inject_stale_read);
  });
  top.child("client", [&](Reader& r) {
    auto& c = s.client;
    r.get("http_probability", c.http_probability);
    r.get("straggler_enabled", c.straggler_enabled);
    r.get("straggler_factor", c.straggler_factor);
    r.get("latency_window", c.latency_window);
    r.get("anti_thrash_enabled", c.anti_thrash_enabled);
    r.get("anti_thrash_threshold", c.anti_thrash_threshold);
    r.millis("backoff_base_ms", c.backoff.base);
    r.millis("backoff_cap_ms", c.backoff.cap);
    r.get("max_attempts", c.backoff.max_attempts);
    r.millis("tcp_timeout_ms", c.tcp_timeout);
    r.millis("http_timeout_ms", c.http_timeout);
    r.get("max_clients_per_tcp_server", s.max_clients_per_tcp_server);
  });
  top.child("workload", [&](Reader& r) {
    auto& w = s.workload;
    std::string mode;
    if (r.get("mode", mode)) w.mode = mode_from_string(mode, r);
    r.seconds("duration_s", w.duration);
    r.seconds("drain_s", w.drain);
    r.seconds("warmup_s", w.warmup);
    r.get("n_vms", w.n_vms);
    r.get("clients", w.clients);
    r.seconds("interval_s", w.interval);
    r.get("pareto_alpha", w.pareto.alpha);
    r.get("pareto_scale", w.pareto.scale);
    r.get("burst_cap", w.pareto.cap_multiplier);
    r.get("burst_capped", w.pareto.capped);
    r.get("load_scale", w.load_scale);
    r.millis("think_time_ms", w.think_time);
    r.seconds("on_s", w.on_time);
    r.seconds("off_s", w.off_time);
    r.child("mix", [&](Reader& m) {
      workload::OpMix mix;
      for (int k = 0; k < kOpKindCount; ++k) {
        m.get(std::string(to_string(static_cast<OpKind>(k))), mix.weights[static_cast<std::size_t>(k)]);
      }
      w.mix = mix;
    });
    r.child("namespace", [&](Reader& n) {
      n.get("depth", w.ns.depth);
      n.get("fanout", w.ns.fanout);
      n.get("files", w.ns.files);
    });
    r.seconds("failure_period_s", w.failure_period);
    r.seconds("failure_offset_s", w.failure_offset);
  });
  top.child("cost", [&](Reader& r) {
    auto& c = s.cost;
    r.get("gb_second_price", c.gb_second_price);
    r.get("per_million_requests", c.per_million_requests);
    r.millis("granularity_ms", c.granularity);
    r.get("vm_vcpus", c.vm_vcpus);
    r.get("vm_mem_gb", c.vm_mem_gb);
    r.get("vm_hour_price", c.vm_hour_price);
    r.get("serverful_vcpu", s.serverful_vcpu);
  });
  top.finish();
}

double as_seconds(sim::Duration d) { return static_cast<double>(d) / 1e6; }
double as_millis(sim::Duration d) { return static_cast<double>(d) / 1e3; }

ordered_json to_ordered(const Scenario& s) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["latency"] = {{"tcp_us", {s.latency.tcp.min, s.latency.tcp.max}},
                  {"http_us", {s.latency.http.min, s.latency.http.max}},
                  {"store_us", {s.latency.store.min, s.latency.store.max}},
                  {"cold_start_us", {s.latency.cold_start.min, s.latency.cold_start.max}}};
  const auto& p = s.platform;
  ordered_json plat;
  plat["n_deployments"] = p.n_deployments;
  plat["concurrency_level"] = p.concurrency_level;
  plat["vcpu_budget"] = p.vcpu_budget;
  plat["per_instance_vcpu"] = p.per_instance_vcpu;
  plat["mem_gb"] = p.mem_gb;
  plat["idle_timeout_s"] = as_seconds(p.idle_timeout);
  plat["reclaim_tick_s"] = as_seconds(p.reclaim_tick);
  plat["max_instances_per_deployment"] = p.max_instances_per_deployment;
  plat["evict_to_admit"] = p.evict_to_admit;
  j["platform"] = plat;
  ordered_json st;
  st["lock_wait_timeout_ms"] = as_millis(s.store.lock_wait_timeout);
  st["orphan_reclaim_after_s"] = as_seconds(s.store.orphan_reclaim_after);
  j["store"] = st;
  ordered_json coh;
  coh["round_timeout_s"] = as_seconds(s.coherence.round_timeout);
  j["coherence"] = coh;
  const auto& n = s.namenode;
  ordered_json nn;
  nn["cache_capacity"] = n.cache_capacity == cache::CacheTrie::kUnbounded ? 0 : n.cache_capacity;
  nn["result_cache_ttl_s"] = as_seconds(n.result_cache_ttl);
  ordered_json cpu;
  for (int k = 0; k < kOpKindCount; ++k) cpu[std::string(to_string(static_cast<OpKind>(k)))] = n.cpu_cost[static_cast<std::size_t>(k)];
  nn["cpu_cost_us"] = cpu;
  nn["result_cache_cpu_us"] = n.result_cache_cpu;
  nn["subtree_batch_size"] = n.subtree_batch_size;
  nn["per_row_cost_us"] = n.per_row_cost;
  nn["max_revalidations"] = n.max_revalidations;
  nn["inject_stale_read"] = n.inject_stale_read;
  j["namenode"] = nn;
  const auto& c = s.client;
  ordered_json cl;
  cl["http_probability"] = c.http_probability;
  cl["straggler_enabled"] = c.straggler_enabled;
  cl["straggler_factor"] = c.straggler_factor;
  cl["latency_window"] = c.latency_window;
  cl["anti_thrash_enabled"] = c.anti_thrash_enabled;
  cl["anti_thrash_threshold"] = c.anti_thrash_threshold;
  cl["backoff_base_ms"] = as_millis(c.backoff.base);
  cl["backoff_cap_ms"] = as_millis(c.backoff.cap);
  cl["max_attempts"] = c.backoff.max_attempts;
  cl["tcp_timeout_ms"] = as_millis(c.tcp_timeout);
  cl["http_timeout_ms"] = as_millis(c.http_timeout);
  cl["max_clients_per_tcp_server"] = s.max_clients_per_tcp_server;
  j["client"] = cl;
  const auto& w = s.workload;
  ordered_json wl;
  wl["mode"] = w.mode == WorkloadMode::kBursty ? "bursty" : "closed";
  wl["duration_s"] = as_seconds(w.duration);
  wl["drain_s"] = as_seconds(w.drain);
  wl["warmup_s"] = as_seconds(w.warmup);
  wl["n_vms"] = w.n_vms;
  wl["clients"] = w.clients;
  wl["interval_s"] = as_seconds(w.interval);
  wl["pareto_alpha"] = w.pareto.alpha;
  wl["pareto_scale"] = w.pareto.scale;
  wl["burst_cap"] = w.pareto.cap_multiplier;
  wl["burst_capped"] = w.pareto.capped;
  wl["load_scale"] = w.load_scale;
  wl["think_time_ms"] = as_millis(w.think_time);
  wl["on_s"] = as_seconds(w.on_time);
  wl["off_s"] = as_seconds(w.off_time);
  ordered_json mix;
  for (int k = 0; k < kOpKindCount; ++k) mix[std::string(to_string(static_cast<OpKind>(k)))] = w.mix.weights[static_cast<std::size_t>(k)];
  wl["mix"] = mix;
  wl["namespace"] = {{"depth", w.ns.depth}, {"fanout", w.ns.fanout}, {"files", w.ns.files}};
  wl["failure_period_s"] = as_seconds(w.failure_period);
  wl["failure_offset_s"] = as_seconds(w.failure_offset);
  j["workload"] = wl;
  ordered_json co;
  co["gb_second_price"] = s.cost.gb_second_price;
  co["per_million_requests"] = s.cost.per_million_requests;
  co["granularity_ms"] = as_millis(s.cost.granularity);
  co["vm_vcpus"] = s.cost.vm_vcpus;
  co["vm_mem_gb"] = s.cost.vm_mem_gb;
  co["vm_hour_price"] = s.cost.vm_hour_price;
  co["serverful_vcpu"] = s.serverful_vcpu;
  j["cost"] = co;
  return j;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string msg = e.what();
    auto pos = msg.find("syntax error");
    throw ConfigError(pos == std::string::npos ? msg : msg.substr(pos), line, col);
  }
  Scenario s;
  Reader top(doc, {}, text);
  read_scenario(top, s);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const Scenario& s) { return to_ordered(s).dump(2) + "\n"; }

// ---- overrides -------------------------------------------------------------

namespace {

std::vector<std::string> split_dots(const std::string& key) {
  std::vector<std::string> out;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) out.push_back(part);
  return out;
}

void collect_leaves(const ordered_json& j, std::vector<std::string>& prefix, std::vector<std::vector<std::string>>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    prefix.push_back(it.key());
    out.push_back(prefix);
    if (it->is_object()) collect_leaves(*it, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

void apply_override(Scenario& s, const std::string& key, const std::string& value) {
  ordered_json j = to_ordered(s);
  std::vector<std::string> target = split_dots(key);
  if (target.empty()) throw ConfigError("empty override key");
  bool autoscaling = target.back() == "autoscaling" && (target.size() == 1 || target == std::vector<std::string>{"platform", "autoscaling"});
  if (autoscaling) {
    target = {"platform", "autoscaling"};
    j["platform"].erase("max_instances_per_deployment");
  } else if (target.size() == 1) {
    std::vector<std::string> prefix;
    std::vector<std::vector<std::string>> leaves;
    collect_leaves(j, prefix, leaves);
    std::vector<std::vector<std::string>> matches;
    for (const auto& l : leaves) {
      if (l.back() == target[0]) matches.push_back(l);
    }
    if (matches.empty()) throw ConfigError("unknown parameter '" + key + "'");
    if (matches.size() > 1) throw ConfigError("ambiguous parameter '" + key + "'; use a dotted key");
    target = matches.front();
  } else {
    const ordered_json* node = &j;
    for (const auto& part : target) {
      if (!node->is_object() || !node->contains(part)) throw ConfigError("unknown parameter '" + key + "'");
      node = &(*node)[part];
    }
  }
  ordered_json parsed;
  try {
    parsed = ordered_json::parse(value);
  } catch (const ordered_json::parse_error&) {
    parsed = value;
  }
  ordered_json* node = &j;
  for (std::size_t i = 0; i + 1 < target.size(); ++i) node = &(*node)[target[i]];
  (*node)[target.back()] = parsed;
  try {
    s = parse_scenario(j.dump(2));
  } catch (const ConfigError& e) {
    throw ConfigError("override " + key + "=" + value + ": " + e.what());
  }
}

// ---- bundled scenarios -----------------------------------------------------

namespace {

Scenario base(const std::string& name) {
  Scenario s;
  s.name = name;
  return s;
}

Scenario spotify(const std::string& name, double scale) {
  Scenario s = base(name);
  s.workload.mode = WorkloadMode::kBursty;
  s.workload.duration = sim::sec(300);
  s.workload.pareto.scale = scale;
  s.workload.load_scale = 0.02;
  return s;
}

Scenario closed_reads(const std::string& name) {
  Scenario s = base(name);
  s.workload.mode = WorkloadMode::kClosed;
  s.workload.mix = workload::OpMix::read_only();
  s.workload.duration = sim::sec(30);
  s.workload.warmup = sim::sec(10);
  s.workload.drain = sim::sec(10);
  return s;
}

}  // namespace

std::vector<std::string> bundled_names() {
  return {"spotify_25k", "spotify_50k", "client_scaling", "resource_scaling", "autoscaling_ablation", "failure_30s",
          "reduced_cache"};
}

Scenario bundled(const std::string& name) {
  if (name == "spotify_25k") return spotify(name, 25000.0);
  if (name == "spotify_50k") return spotify(name, 50000.0);
  if (name == "client_scaling") {
    Scenario s = closed_reads(name);
    s.workload.clients = 64;
    s.workload.duration = sim::sec(20);
    s.workload.warmup = sim::sec(5);
    return s;
  }
  if (name == "resource_scaling") {
    Scenario s = closed_reads(name);
    s.workload.clients = 64;
    s.workload.duration = sim::sec(20);
    s.workload.warmup = sim::sec(5);
    s.platform.per_instance_vcpu = 4.0;
    s.platform.mem_gb = 19.2;
    s.platform.vcpu_budget = 64.0;
    return s;
  }
  if (name == "autoscaling_ablation") {
    Scenario s = closed_reads(name);
    s.workload.clients = 256;
    s.workload.duration = sim::sec(20);
    s.workload.warmup = sim::sec(5);
    s.namenode.cpu_cost[static_cast<std::size_t>(OpKind::kRead)] = 2000;
    s.namenode.cpu_cost[static_cast<std::size_t>(OpKind::kStat)] = 2000;
    s.namenode.cpu_cost[static_cast<std::size_t>(OpKind::kLs)] = 2000;
    return s;
  }
  if (name == "failure_30s") {
    Scenario s = spotify(name, 25000.0);
    s.workload.load_scale = 0.01;
    s.workload.failure_period = sim::sec(30);
    s.workload.failure_offset = sim::sec(22);
    return s;
  }
  if (name == "reduced_cache") {
    Scenario s = closed_reads(name);
    s.workload.clients = 64;
    s.platform.max_instances_per_deployment = 1;
    s.namenode.cache_capacity = 1600;
    return s;
  }
  throw ConfigError("unknown bundled scenario '" + name + "'");
}

Scenario resolve(const std::string& name_or_path) {
  for (const auto& n : bundled_names()) {
    if (n == name_or_path) return bundled(n);
  }
  return load_scenario_file(name_or_path);
}

}  // namespace lfs::scenario
