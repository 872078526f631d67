#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "lambdafs/coherence.hpp"
#include "lambdafs/faas_platform.hpp"
#include "lambdafs/fs_types.hpp"
#include "lambdafs/namenode.hpp"
#include "lambdafs/namespace_store.hpp"
#include "lambdafs/sim_kernel.hpp"
#include "lambdafs/trace.hpp"
#include "lambdafs/verify.hpp"

namespace lfs::testkit {

/// Store, platform, coordinator and NameNode service wired together the way
/// the engine does, driven directly by tests.
struct Cluster {
  sim::Simulator sim;
  store::MetadataStore store;
  faas::Platform platform;
  coherence::Coordinator coord;
  nn::NameNodeService nn;
  trace::ProtocolTrace trace;
  std::vector<verify::HistoryOp> history;
  std::vector<store::INodeRecord> initial;

  explicit Cluster(faas::PlatformConfig pc = {}, nn::NameNodeConfig nc = {}, std::uint64_t seed = 1)
      : store(sim),
        platform(sim, pc, sim::LatencyModel{}, seed),
        coord(sim, sim::LatencyModel{}, seed + 1),
        nn(sim, store, platform, coord, sim::LatencyModel{}, nc, seed + 2) {
    platform.on_ready.push_back([this](const faas::Instance& i) { nn.on_ready(i); });
    platform.on_terminate.push_back([this](const faas::Instance& i) { nn.on_terminate(i); });
    coord.set_trace(&trace);
    store.on_commit = [this](const store::CommitEvent& e) {
      trace::TraceEvent t;
      t.type = trace::EventType::kCommit;
      t.t = e.at;
      t.instance = e.owner;
      t.request_id = e.request_id;
      t.op_id = e.tag;
      t.txn = e.txn;
      for (const auto& w : *e.writes) {
        trace::TraceWrite tw;
        tw.erase = w.kind == store::StoreWrite::Kind::kErase;
        tw.id = to_u64(w.record.id);
        tw.parent = to_u64(w.record.parent);
        tw.name = w.record.name;
        tw.kind = w.record.kind;
        tw.perms = w.record.perms;
        tw.mtime = w.record.mtime;
        t.writes.push_back(tw);
      }
      trace.add(std::move(t));
    };
    store.on_subtree_event = [this](std::string_view ev, const store::SubtreeOpEntry& e, std::string_view root) {
      trace::TraceEvent t;
      t.type = trace::EventType::kSubtree;
      t.t = sim.now();
      t.instance = e.owner;
      t.subtree_event = std::string(ev);
      t.op_id = e.op_id;
      t.root = to_u64(e.root);
      t.paths.emplace_back(root);
      trace.add(std::move(t));
    };
    platform.start();
  }

  void snapshot_initial() { initial = store.snapshot(); }

  /// Cold-starts one instance in `deployment` and waits until it is warm.
  faas::InstanceId start_instance(int deployment) {
    auto id = platform.acquire_helper(deployment);
    while (!platform.is_warm(*id)) sim.run_until(sim.now() + sim::msec(10));
    return *id;
  }

  /// Starts `n` distinct warm instances in `deployment` by filling HTTP slots.
  std::vector<faas::InstanceId> start_instances(int deployment, int n) {
    std::vector<faas::InstanceId> held;
    const int cl = platform.config().concurrency_level;
    for (int i = 0; i < n * cl; ++i) {
      platform.route_http(deployment, [&held](faas::InstanceId id) { held.push_back(id); });
    }
    while (held.size() < static_cast<std::size_t>(n * cl)) sim.run_until(sim.now() + sim::msec(10));
    std::vector<faas::InstanceId> out;
    for (auto id : held) {
      if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
      platform.release_slot(id);
    }
    return out;
  }

  /// Sends `op` to `instance` without waiting; the outcome lands in `out`.
  void send(faas::InstanceId instance, FsOp op, std::string rid, std::optional<OpResult>& out) {
    verify::HistoryOp h;
    h.request_id = rid;
    h.client = 0;
    h.op = op;
    h.invoke = sim.now();
    std::size_t index = history.size();
    history.push_back(h);
    nn.handle(instance, nn::RpcRequest{rid, 0, std::move(op)}, [this, index, &out](OpResult r) {
      out = r;
      history[index].response = sim.now();
      history[index].result = r;
    });
  }

  /// Runs until every outcome is set or `limit` of virtual time passes.
  bool wait(const std::vector<std::optional<OpResult>*>& outs, sim::Duration limit = sim::sec(30)) {
    sim::Time deadline = sim.now() + limit;
    auto done = [&] {
      for (auto* o : outs) {
        if (!o->has_value()) return false;
      }
      return true;
    };
    while (!done() && sim.now() < deadline) sim.run_until(sim.now() + sim::msec(1));
    return done();
  }

  OpResult call(faas::InstanceId instance, FsOp op, std::string rid) {
    std::optional<OpResult> out;
    send(instance, std::move(op), std::move(rid), out);
    if (!wait({&out})) {
      OpResult r;
      r.status = FsStatus::kGiveUp;
      return r;
    }
    return *out;
  }

  verify::Report verify() const { return verify::verify_run(initial, store.snapshot(), trace.events(), history); }
};

inline FsOp op_of(OpKind kind, std::string path, std::string dst = {}) {
  FsOp op;
  op.kind = kind;
  op.path = std::move(path);
  op.dst = std::move(dst);
  return op;
}

/// Creates every missing directory of `path` (inclusive) outside any transaction.
inline INodeId mkdirs(store::MetadataStore& s, const std::string& path) {
  INodeId cur = kRootId;
  std::string walked;
  std::size_t i = 1;
  while (i <= path.size()) {
    std::size_t j = path.find('/', i);
    if (j == std::string::npos) j = path.size();
    std::string name = path.substr(i, j - i);
    if (!name.empty()) {
      auto c = s.child(cur, name);
      cur = c ? *c : s.create_direct(cur, name, NodeKind::kDirectory);
    }
    i = j + 1;
  }
  return cur;
}

}  // namespace lfs::testkit
