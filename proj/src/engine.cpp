#include "lambdafs/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <sstream>

#include <json.hpp>

#include "lambdafs/partitioning.hpp"
#include "lambdafs/workload.hpp"

namespace lfs::engine {

using faas::InstanceId;
using nlohmann::ordered_json;
using scenario::Scenario;
using scenario::WorkloadMode;

namespace {

constexpr std::uint64_t kNetworkRng = 5;
constexpr std::uint64_t kGeneratorRng = 6;
constexpr std::uint64_t kParetoRng = 7;
constexpr std::uint64_t kFaultRng = 8;
constexpr std::uint64_t kPlatformRng = 1;
constexpr std::uint64_t kCoordinatorRng = 2;
constexpr int kSubTicks = 100;

trace::TraceWrite to_trace_write(const store::StoreWrite& w) {
  trace::TraceWrite t;
  t.erase = w.kind == store::StoreWrite::Kind::kErase;
  t.id = to_u64(w.record.id);
  t.parent = to_u64(w.record.parent);
  t.name = w.record.name;
  t.kind = w.record.kind;
  t.perms = w.record.perms;
  t.mtime = w.record.mtime;
  return t;
}

const Scenario& validated(const Scenario& s) {
  s.validate();
  return s;
}

class Engine {
 public:
  Engine(const Scenario& s, const RunOptions& opts)
      : s_(validated(s)),
        opts_(opts),
        store_(sim_, s.store),
        platform_(sim_, s.platform, s.latency, sim::derive_seed(s.seed, kPlatformRng, 0)),
        coord_(sim_, s.latency, sim::derive_seed(s.seed, kCoordinatorRng, 0), s.coherence),
        nn_(sim_, store_, platform_, coord_, s.latency, s.namenode, s.seed),
        table_(s.workload.n_vms, s.servers_per_vm(), s.platform.n_deployments),
        pool_(
            sim_, s.client, table_, s.platform.n_deployments, s.seed,
            [this](InstanceId inst, const nn::RpcRequest& req, client::ClientPool::Reply reply) {
              send_tcp(inst, req, std::move(reply));
            },
            [this](int dep, const nn::RpcRequest& req, client::ClientPool::HttpReply reply) {
              send_http(dep, req, std::move(reply));
            }),
        series_(s.workload.duration + s.workload.drain),
        picker_(s.workload.mix, mirror_),
        net_rng_(sim::derive_seed(s.seed, kNetworkRng, 0)),
        pareto_rng_(sim::derive_seed(s.seed, kParetoRng, 0)),
        fault_rng_(sim::derive_seed(s.seed, kFaultRng, 0)) {
    wire();
    seed();
    make_clients();
  }

  RunResult run() {
    const auto& w = s_.workload;
    platform_.start();
    schedule_metrics();
    schedule_faults();
    sim_.schedule_at(std::min(w.warmup, w.duration), sim::EventKind::kIntervalTick, [this] { mark_warmup(); });
    if (w.mode == WorkloadMode::kBursty) {
      start_bursty();
    } else {
      start_closed();
    }
    sim_.run_until(w.duration);
    stopped_ = true;
    if (!warm_marked_) mark_warmup();
    mark_window_end();
    const sim::Time limit = w.duration + w.drain;
    while (in_flight_ > 0 && sim_.now() < limit) sim_.run_until(std::min(limit, sim_.now() + sim::msec(100)));
    return finish();
  }

 private:
  struct VmState {
    workload::RolloverLedger ledger;
    std::deque<std::uint64_t> idle;
    std::int64_t second_budget = 0;
    std::int64_t issued_this_second = 0;
    std::int64_t pace_target = 0;
  };
  struct ClientState {
    int vm = 0;
    sim::Rng rng{1};
    std::size_t history_index = 0;
  };

  void wire() {
    platform_.on_ready.push_back([this](const faas::Instance& inst) { nn_.on_ready(inst); });
    platform_.on_terminate.push_back([this](const faas::Instance& inst) {
      nn_.on_terminate(inst);
      table_.drop(inst.id);
    });
    pool_.on_request = [this](sim::Time at, client::Channel ch) {
      if (at < s_.workload.warmup || at >= s_.workload.duration) return;
      ++result_.requests_post_warmup;
      if (ch == client::Channel::kHttp) ++result_.http_post_warmup;
    };
    if (opts_.record_trace) {
      coord_.set_trace(&result_.trace);
      store_.on_commit = [this](const store::CommitEvent& e) {
        trace::TraceEvent t;
        t.type = trace::EventType::kCommit;
        t.t = e.at;
        t.instance = e.owner;
        t.request_id = e.request_id;
        t.op_id = e.tag;
        t.txn = e.txn;
        for (const auto& w : *e.writes) t.writes.push_back(to_trace_write(w));
        result_.trace.add(std::move(t));
      };
      store_.on_subtree_event = [this](std::string_view event, const store::SubtreeOpEntry& entry,
                                       std::string_view root_path) {
        trace::TraceEvent t;
        t.type = trace::EventType::kSubtree;
        t.t = sim_.now();
        t.instance = entry.owner;
        t.subtree_event = std::string(event);
        t.op_id = entry.op_id;
        t.root = to_u64(entry.root);
        t.paths.emplace_back(root_path);
        result_.trace.add(std::move(t));
      };
    }
  }

  void seed() {
    for (const auto& e : workload::seed_namespace(store_, s_.workload.ns)) mirror_.add(e.path, e.is_dir);
    if (opts_.record_trace) {
      result_.initial_snapshot = store_.snapshot();
      result_.initial_snapshot_jsonl = store_.snapshot_jsonl();
    }
  }

  void make_clients() {
    const auto& w = s_.workload;
    vms_.resize(static_cast<std::size_t>(w.n_vms));
    std::vector<int> per_vm(static_cast<std::size_t>(w.n_vms), 0);
    for (int i = 0; i < w.clients; ++i) {
      int vm = i % w.n_vms;
      int index = per_vm[static_cast<std::size_t>(vm)]++;
      int slot = s_.max_clients_per_tcp_server > 0 ? index / s_.max_clients_per_tcp_server : 0;
      std::uint64_t id = pool_.add_client(table_.server_for(vm, slot));
      ClientState c;
      c.vm = vm;
      c.rng = sim::Rng(sim::derive_seed(s_.seed, kGeneratorRng, id));
      clients_.push_back(std::move(c));
      vms_[static_cast<std::size_t>(vm)].idle.push_back(id);
    }
  }

  // ---- transport -----------------------------------------------------------

  void send_tcp(InstanceId inst, const nn::RpcRequest& req, client::ClientPool::Reply reply) {
    sim::Duration rtt = s_.latency.sample(sim::LatencyKind::kTcp, net_rng_);
    sim::Duration out = rtt / 2;
    sim::Duration back = rtt - out;
    sim_.schedule(out, sim::EventKind::kRpcArrival, [this, inst, req, back, reply = std::move(reply)]() mutable {
      if (!nn_.is_live(inst)) return;
      nn_.handle(inst, std::move(req), [this, back, reply = std::move(reply)](OpResult r) {
        sim_.schedule(back, sim::EventKind::kRpcComplete, [reply, r] { reply(r); });
      });
    });
  }

  void send_http(int dep, const nn::RpcRequest& req, client::ClientPool::HttpReply reply) {
    sim::Duration rtt = s_.latency.sample(sim::LatencyKind::kHttp, net_rng_);
    sim::Duration out = rtt / 2;
    sim::Duration back = rtt - out;
    sim_.schedule(out, sim::EventKind::kRpcArrival, [this, dep, req, back, reply = std::move(reply)]() mutable {
      ++result_.billed_requests;
      series_.record_request(sim_.now());
      sim::Time arrived = sim_.now();
      platform_.route_http(dep, [this, dep, req = std::move(req), back, arrived,
                                 reply = std::move(reply)](InstanceId inst) mutable {
        sim::Duration wait = sim_.now() - arrived;
        nn_.handle(inst, std::move(req), [this, inst, dep, back, wait, reply = std::move(reply)](OpResult r) {
          platform_.release_slot(inst);
          sim_.schedule(back, sim::EventKind::kRpcComplete, [reply, r, inst, dep, wait] { reply(r, inst, dep, wait); });
        });
      });
    });
  }

  // ---- operation issue and completion -------------------------------------

  std::string fresh_name() { return "n" + std::to_string(next_name_++); }

  void issue(std::uint64_t client) {
    ClientState& c = clients_[client];
    FsOp op = picker_.pick(c.rng, [this] { return fresh_name(); });
    verify::HistoryOp h;
    h.client = client;
    h.op = op;
    h.invoke = sim_.now();
    c.history_index = result_.history.size();
    result_.history.push_back(std::move(h));
    result_.request_meta.emplace_back();
    ++result_.issued;
    ++in_flight_;
    std::size_t index = c.history_index;
    std::string id = pool_.submit(client, std::move(op), [this](const client::CompletedOp& done) { on_done(done); });
    result_.history[index].request_id = std::move(id);
  }

  void on_done(const client::CompletedOp& done) {
    ClientState& c = clients_[done.client];
    verify::HistoryOp& h = result_.history[c.history_index];
    h.response = done.response;
    h.result = done.result;
    RequestMeta& m = result_.request_meta[c.history_index];
    m.via = done.via;
    m.attempts = done.attempts;
    m.resubmits = done.resubmits;
    m.gateway_wait = done.gateway_wait;
    --in_flight_;
    bool success = done.result.status != FsStatus::kGiveUp;
    series_.record_completion(done.response, done.op.kind, done.response - done.invoke, success);
    ++result_.status_counts[std::string(to_string(done.result.status))];
    if (success) {
      ++result_.completed;
      ++result_.completed_by_kind[static_cast<std::size_t>(done.op.kind)];
    } else {
      ++result_.failed;
    }
    if (done.result.status == FsStatus::kOk) update_mirror(done.op);
    if (s_.workload.mode == WorkloadMode::kBursty) {
      VmState& vm = vms_[static_cast<std::size_t>(c.vm)];
      vm.idle.push_back(done.client);
      try_issue(vm);
    } else {
      schedule_closed(done.client, sim_.now() + s_.workload.think_time);
    }
  }

  void update_mirror(const FsOp& op) {
    switch (op.kind) {
      case OpKind::kCreate:
        mirror_.add(op.path, false);
        break;
      case OpKind::kMkdir:
        mirror_.add(op.path, true);
        break;
      case OpKind::kDelete:
        mirror_.remove_subtree(op.path);
        break;
      case OpKind::kMv:
        mirror_.move_subtree(op.path, op.dst);
        break;
      default:
        break;
    }
  }

  // ---- bursty driver -------------------------------------------------------

  void start_bursty() {
    const auto& w = s_.workload;
    for (sim::Time t = 0; t < w.duration; t += w.interval) {
      sim_.schedule_at(t, sim::EventKind::kIntervalTick, [this] {
        double delta = workload::next_interval_target(s_.workload.pareto, pareto_rng_) * s_.workload.load_scale;
        per_vm_rate_ = workload::RolloverLedger::per_vm_rate(delta, s_.workload.n_vms);
      });
    }
    for (sim::Time t = 0; t < w.duration; t += sim::sec(1)) {
      sim_.schedule_at(t, sim::EventKind::kIntervalTick, [this] {
        for (auto& vm : vms_) {
          vm.ledger.start_second(per_vm_rate_);
          vm.second_budget = vm.ledger.available();
          vm.issued_this_second = 0;
          vm.pace_target = 0;
        }
        sub_tick(1);
      });
    }
  }

  void sub_tick(int k) {
    if (stopped_) return;
    for (auto& vm : vms_) {
      vm.pace_target = (vm.second_budget * k + kSubTicks - 1) / kSubTicks;
      try_issue(vm);
    }
    if (k < kSubTicks) {
      sim_.schedule(sim::sec(1) / kSubTicks, sim::EventKind::kIntervalTick, [this, k] { sub_tick(k + 1); });
    }
  }

  void try_issue(VmState& vm) {
    if (stopped_) return;
    while (vm.issued_this_second < vm.pace_target && !vm.idle.empty() && vm.ledger.take()) {
      std::uint64_t client = vm.idle.front();
      vm.idle.pop_front();
      ++vm.issued_this_second;
      issue(client);
    }
  }

  // ---- closed-loop driver --------------------------------------------------

  bool in_on_window(sim::Time t) const {
    const auto& w = s_.workload;
    if (w.off_time <= 0) return true;
    return t % (w.on_time + w.off_time) < w.on_time;
  }

  sim::Time next_on_window(sim::Time t) const {
    const auto& w = s_.workload;
    if (in_on_window(t)) return t;
    sim::Duration cycle = w.on_time + w.off_time;
    return (t / cycle + 1) * cycle;
  }

  void start_closed() {
    for (std::uint64_t id = 0; id < clients_.size(); ++id) {
      sim::Duration jitter = clients_[id].rng.uniform_int(0, sim::msec(10));
      schedule_closed(id, jitter);
    }
  }

  void schedule_closed(std::uint64_t client, sim::Time at) {
    if (!in_on_window(at)) {
      sim::Time start = next_on_window(at);
      at = start + clients_[client].rng.uniform_int(0, sim::msec(10));
    }
    if (at >= s_.workload.duration) return;
    sim_.schedule_at(at, sim::EventKind::kInternal, [this, client] {
      if (stopped_) return;
      issue(client);
    });
  }

  // ---- periodic observers --------------------------------------------------

  void schedule_metrics() {
    const auto& w = s_.workload;
    for (sim::Time t = 0; t < w.duration + w.drain; t += sim::sec(1)) {
      sim_.schedule_at(t, sim::EventKind::kIntervalTick, [this] {
        series_.sample_platform(sim_.now(), platform_.active_counts());
        for (InstanceId id : platform_.all_live()) {
          if (const cache::CacheTrie* c = nn_.cache(id)) {
            result_.peak_cache_entries = std::max(result_.peak_cache_entries, c->size());
          }
        }
      });
    }
  }

  void schedule_faults() {
    const auto& w = s_.workload;
    if (w.failure_period <= 0) return;
    faults_ = std::make_unique<workload::FailureSchedule>(w.failure_period, w.duration, s_.platform.n_deployments,
                                                          w.failure_offset);
    for (sim::Time t : faults_->times()) {
      sim_.schedule_at(t, sim::EventKind::kInstanceCrash, [this] { inject_failure(); });
    }
  }

  void inject_failure() {
    int dep = faults_->next_target([this](int d) { return !platform_.warm_instances(d).empty(); });
    if (dep < 0) return;
    auto warm = platform_.warm_instances(dep);
    InstanceId victim = warm[fault_rng_.index(warm.size())];
    Termination t;
    t.at = sim_.now();
    t.deployment = dep;
    t.instance = victim;
    result_.terminations.push_back(t);
    platform_.terminate(victim);
  }

  void mark_warmup() {
    if (warm_marked_) return;
    warm_marked_ = true;
    hits_at_warmup_ = nn_.stats().cache_hits;
    misses_at_warmup_ = nn_.stats().cache_misses;
  }

  void mark_window_end() {
    result_.cache_hits_post_warmup = nn_.stats().cache_hits - hits_at_warmup_;
    result_.cache_misses_post_warmup = nn_.stats().cache_misses - misses_at_warmup_;
  }

  // ---- wrap-up -------------------------------------------------------------

  RunResult finish() {
    const sim::Time end = sim_.now();
    result_.scenario = s_;
    result_.end = end;
    result_.in_flight = in_flight_;
    platform_.finalize(end);
    auto usage = metrics::usage_from_platform(platform_);
    result_.cost_ppu = metrics::cost_pay_per_use(usage, result_.billed_requests, s_.cost);
    result_.cost_simplified = metrics::cost_simplified(usage, result_.billed_requests, s_.cost);
    double cluster = s_.serverful_vcpu > 0.0 ? s_.serverful_vcpu : s_.platform.vcpu_budget;
    result_.cost_serverful = metrics::cost_serverful(cluster, end, s_.cost);
    series_.truncate(static_cast<std::size_t>((end + sim::sec(1) - 1) / sim::sec(1)));
    series_.attribute_costs(usage, s_.cost);
    for (auto& t : result_.terminations) measure_recovery(t);
    result_.series = std::move(series_);
    result_.client_stats = pool_.stats();
    result_.nn_stats = nn_.stats();
    result_.platform_stats = platform_.stats();
    result_.coord_stats = coord_.stats();
    result_.store_stats = store_.stats();
    result_.events_dispatched = sim_.dispatched();
    result_.event_digest = sim_.trace_digest();
    if (opts_.record_trace) {
      result_.final_snapshot = store_.snapshot();
      result_.final_snapshot_jsonl = store_.snapshot_jsonl();
    }
    return std::move(result_);
  }

  void measure_recovery(Termination& t) {
    const auto& buckets = series_.buckets();
    auto sec_index = static_cast<std::int64_t>(t.at / sim::sec(1));
    std::int64_t from = std::max<std::int64_t>(0, sec_index - 5);
    double sum = 0.0;
    for (std::int64_t i = from; i < sec_index; ++i) sum += static_cast<double>(buckets[static_cast<std::size_t>(i)].ops);
    t.baseline = sec_index > from ? sum / static_cast<double>(sec_index - from) : 0.0;
    for (std::int64_t i = sec_index; i < static_cast<std::int64_t>(buckets.size()); ++i) {
      if (static_cast<double>(buckets[static_cast<std::size_t>(i)].ops) >= 0.9 * t.baseline) {
        t.recovery_seconds = static_cast<int>(i - sec_index + 1);
        break;
      }
    }
  }

  Scenario s_;
  RunOptions opts_;
  sim::Simulator sim_;
  store::MetadataStore store_;
  faas::Platform platform_;
  coherence::Coordinator coord_;
  nn::NameNodeService nn_;
  client::ConnectionTable table_;
  client::ClientPool pool_;
  metrics::MetricSeries series_;
  workload::NamespaceMirror mirror_;
  workload::OpPicker picker_;
  sim::Rng net_rng_;
  sim::Rng pareto_rng_;
  sim::Rng fault_rng_;
  std::unique_ptr<workload::FailureSchedule> faults_;
  std::vector<VmState> vms_;
  std::vector<ClientState> clients_;
  RunResult result_;
  double per_vm_rate_ = 0.0;
  std::uint64_t next_name_ = 1;
  std::uint64_t in_flight_ = 0;
  bool stopped_ = false;
  bool warm_marked_ = false;
  std::uint64_t hits_at_warmup_ = 0;
  std::uint64_t misses_at_warmup_ = 0;
};

ordered_json quantiles_json(const metrics::QuantileTable& q) {
  ordered_json j;
  j["count"] = q.count;
  j["mean_us"] = q.mean;
  j["p50_us"] = q.p50;
  j["p90_us"] = q.p90;
  j["p99_us"] = q.p99;
  j["p999_us"] = q.p999;
  j["max_us"] = q.max;
  return j;
}

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

}  // namespace

double RunResult::http_fraction_post_warmup() const {
  return requests_post_warmup == 0 ? 0.0 : static_cast<double>(http_post_warmup) / static_cast<double>(requests_post_warmup);
}

double RunResult::cache_hit_rate_post_warmup() const {
  std::uint64_t total = cache_hits_post_warmup + cache_misses_post_warmup;
  return total == 0 ? 0.0 : static_cast<double>(cache_hits_post_warmup) / static_cast<double>(total);
}

double RunResult::throughput(sim::Time start, sim::Time finish) const {
  const auto& b = series.buckets();
  auto first = static_cast<std::size_t>(std::max<sim::Time>(0, start) / sim::sec(1));
  auto last = std::min(b.size(), static_cast<std::size_t>(std::max<sim::Time>(0, finish) / sim::sec(1)));
  if (last <= first) return 0.0;
  double sum = 0.0;
  for (std::size_t i = first; i < last; ++i) sum += static_cast<double>(b[i].ops);
  return sum / static_cast<double>(last - first);
}

double RunResult::avg_throughput() const {
  double seconds = static_cast<double>(scenario.workload.duration) / 1e6;
  return static_cast<double>(completed) / seconds;
}

double RunResult::avg_read_throughput() const {
  double seconds = static_cast<double>(scenario.workload.duration) / 1e6;
  std::uint64_t reads = 0;
  for (OpKind k : {OpKind::kRead, OpKind::kStat, OpKind::kLs}) reads += completed_by_kind[static_cast<std::size_t>(k)];
  return static_cast<double>(reads) / seconds;
}

double RunResult::mean_latency(const std::vector<OpKind>& kinds) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (OpKind k : kinds) {
    for (auto v : series.latencies(k)) {
      sum += static_cast<double>(v);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::string RunResult::summary_json() const {
  ordered_json j;
  j["schema_version"] = scenario::kSchemaVersion;
  j["scenario"] = scenario.name;
  j["seed"] = scenario.seed;
  j["workload_mode"] = scenario.workload.mode == WorkloadMode::kBursty ? "bursty" : "closed";
  j["duration_s"] = static_cast<double>(scenario.workload.duration) / 1e6;
  j["end_s"] = static_cast<double>(end) / 1e6;

  ordered_json ops;
  ops["issued"] = issued;
  ops["completed"] = completed;
  ops["failed"] = failed;
  ops["in_flight"] = in_flight;
  ordered_json by_kind;
  for (int k = 0; k < kOpKindCount; ++k) {
    by_kind[std::string(to_string(static_cast<OpKind>(k)))] = completed_by_kind[static_cast<std::size_t>(k)];
  }
  ops["completed_by_kind"] = by_kind;
  ordered_json statuses = ordered_json::object();
  for (const auto& [name, count] : status_counts) statuses[name] = count;
  ops["status"] = statuses;
  j["operations"] = ops;

  ordered_json tp;
  tp["avg_ops_per_s"] = avg_throughput();
  tp["avg_read_ops_per_s"] = avg_read_throughput();
  std::uint64_t peak = 0;
  for (const auto& b : series.buckets()) peak = std::max(peak, b.ops);
  tp["peak_ops_per_s"] = peak;
  j["throughput"] = tp;

  ordered_json lat;
  lat["all"] = quantiles_json(metrics::latency_cdf(series.all_latencies()));
  for (int k = 0; k < kOpKindCount; ++k) {
    const auto& samples = series.latencies(static_cast<OpKind>(k));
    if (samples.empty()) continue;
    lat[std::string(to_string(static_cast<OpKind>(k)))] = quantiles_json(metrics::latency_cdf(samples));
  }
  j["latency"] = lat;

  ordered_json cost;
  cost["pay_per_use"] = cost_ppu;
  cost["simplified"] = cost_simplified;
  cost["serverful"] = cost_serverful;
  cost["billed_requests"] = billed_requests;
  j["cost"] = cost;

  ordered_json ppc;
  ppc["pay_per_use"] = optional_json(metrics::aggregate_perf_per_cost(avg_throughput(), cost_ppu));
  ppc["simplified"] = optional_json(metrics::aggregate_perf_per_cost(avg_throughput(), cost_simplified));
  ppc["serverful"] = optional_json(metrics::aggregate_perf_per_cost(avg_throughput(), cost_serverful));
  j["perf_per_cost"] = ppc;

  ordered_json rpc;
  rpc["requests_post_warmup"] = requests_post_warmup;
  rpc["http_post_warmup"] = http_post_warmup;
  rpc["http_fraction_post_warmup"] = http_fraction_post_warmup();
  rpc["tcp_requests"] = client_stats.tcp_requests;
  rpc["http_requests"] = client_stats.http_requests;
  rpc["http_replacements"] = client_stats.http_replacements;
  rpc["no_connection"] = client_stats.no_connection;
  rpc["foreign_routes"] = client_stats.foreign_routes;
  rpc["retries"] = client_stats.retries;
  rpc["timeouts"] = client_stats.timeouts;
  rpc["straggler_resubmits"] = client_stats.straggler_resubmits;
  rpc["give_ups"] = client_stats.give_ups;
  rpc["anti_thrash_entries"] = client_stats.anti_thrash_entries;
  j["rpc"] = rpc;

  ordered_json cache;
  cache["hits"] = nn_stats.cache_hits;
  cache["misses"] = nn_stats.cache_misses;
  cache["hits_post_warmup"] = cache_hits_post_warmup;
  cache["misses_post_warmup"] = cache_misses_post_warmup;
  cache["hit_rate_post_warmup"] = cache_hit_rate_post_warmup();
  cache["peak_entries"] = peak_cache_entries;
  j["cache"] = cache;

  ordered_json nn;
  nn["requests"] = nn_stats.requests;
  nn["foreign_requests"] = nn_stats.foreign_requests;
  nn["result_cache_hits"] = nn_stats.result_cache_hits;
  nn["retry_table_hits"] = nn_stats.retry_table_hits;
  nn["subtree_ops"] = nn_stats.subtree_ops;
  nn["subtree_batches"] = nn_stats.subtree_batches;
  nn["offloaded_batches"] = nn_stats.offloaded_batches;
  nn["prefix_invalidations"] = nn_stats.prefix_invalidations;
  nn["lost_requests"] = nn_stats.lost_requests;
  j["namenode"] = nn;

  ordered_json plat;
  plat["cold_starts"] = platform_stats.cold_starts;
  plat["terminations"] = platform_stats.terminations;
  plat["reclaimed"] = platform_stats.reclaimed;
  plat["evictions"] = platform_stats.evictions;
  plat["queued_invocations"] = platform_stats.queued_invocations;
  plat["http_invocations"] = platform_stats.http_invocations;
  plat["peak_vcpu"] = platform_stats.peak_vcpu;
  int peak_instances = 0;
  for (const auto& b : series.buckets()) peak_instances = std::max(peak_instances, b.instances);
  plat["peak_instances"] = peak_instances;
  j["platform"] = plat;

  ordered_json coh;
  coh["rounds"] = coord_stats.rounds;
  coh["inv_messages"] = coord_stats.inv_messages;
  coh["ack_messages"] = coord_stats.ack_messages;
  coh["timeouts"] = coord_stats.timeouts;
  coh["abandoned"] = coord_stats.abandoned;
  j["coherence"] = coh;

  ordered_json st;
  st["commits"] = store_stats.commits;
  st["aborts"] = store_stats.aborts;
  st["writes"] = store_stats.writes;
  st["lock_waits"] = store_stats.lock_waits;
  st["lock_timeouts"] = store_stats.lock_timeouts;
  st["subtree_conflicts"] = store_stats.subtree_conflicts;
  j["store"] = st;

  ordered_json faults = ordered_json::array();
  for (const auto& t : terminations) {
    ordered_json f;
    f["t_s"] = static_cast<double>(t.at) / 1e6;
    f["deployment"] = t.deployment;
    f["instance"] = t.instance;
    f["baseline_ops_per_s"] = t.baseline;
    f["recovery_s"] = t.recovery_seconds;
    faults.push_back(f);
  }
  j["terminations"] = faults;

  ordered_json ev;
  ev["dispatched"] = events_dispatched;
  char digest[19];
  std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(event_digest));
  ev["digest"] = digest;
  j["events"] = ev;
  return j.dump(2) + "\n";
}

std::string RunResult::requests_csv() const {
  std::ostringstream os;
  os << "request_id,client,op,via,attempts,resubmits,status,invoke_us,latency_us,gateway_wait_us\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& h = history[i];
    const auto& m = request_meta[i];
    os << h.request_id << ',' << h.client << ',' << to_string(h.op.kind) << ',' << client::to_string(m.via) << ','
       << m.attempts << ',' << m.resubmits << ',';
    if (h.response >= 0) {
      os << to_string(h.result.status) << ',' << h.invoke << ',' << (h.response - h.invoke);
    } else {
      os << "in_flight," << h.invoke << ",";
    }
    os << ',' << m.gateway_wait << '\n';
  }
  return os.str();
}

RunResult run(const Scenario& s, const RunOptions& opts) {
  Engine e(s, opts);
  return e.run();
}

}  // namespace lfs::engine
