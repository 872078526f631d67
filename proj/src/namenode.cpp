#include "lambdafs/namenode.hpp"

#include <algorithm>

#include "lambdafs/partitioning.hpp"
#include "lambdafs/path.hpp"

namespace lfs::nn {

using store::INodeRecord;
using store::Resolution;
using store::StoreError;
using store::TxnId;

namespace {

OpResult status_only(FsStatus s) {
  OpResult r;
  r.status = s;
  return r;
}

OpResult ok_from(const INodeRecord& rec, std::size_t children) {
  OpResult r;
  r.status = FsStatus::kOk;
  r.id = to_u64(rec.id);
  r.mtime = rec.mtime;
  r.kind = rec.kind;
  r.children = static_cast<std::uint32_t>(children);
  return r;
}

FsStatus miss_status(const Resolution& res) {
  if (!res.records.empty() && !res.records.back().is_dir()) return FsStatus::kNotDirectory;
  return FsStatus::kNotFound;
}

std::vector<INodeId> ids_of(const Resolution& res) {
  std::vector<INodeId> ids;
  ids.reserve(res.records.size());
  for (const auto& r : res.records) ids.push_back(r.id);
  return ids;
}

}  // namespace

struct NameNodeService::WriteCtx {
  InstanceId inst = faas::kNoInstance;
  RpcRequest req;
  Reply done;
  TxnId txn = 0;
  int attempts = 0;
  std::vector<INodeId> lock_ids;
  bool erase = false;
  INodeRecord record;
  OpResult result;
  std::set<int> targets;
};

struct NameNodeService::SubtreeCtx {
  InstanceId leader = faas::kNoInstance;
  RpcRequest req;
  Reply done;
  store::SubtreeKind kind = store::SubtreeKind::kDelete;
  int attempts = 0;
  INodeId root = kNoINode;
  std::string src;
  store::SubtreeDescription desc;
  std::vector<std::size_t> order;
  std::vector<std::pair<std::size_t, std::size_t>> batches;
  std::vector<std::vector<std::size_t>> waves;
  std::size_t wave = 0;
  std::size_t pending = 0;
  bool failed = false;
  std::vector<int> helper_deps;
  std::size_t helper_cursor = 0;
};

NameNodeService::NameNodeService(sim::Simulator& sim, store::MetadataStore& store, faas::Platform& platform,
                                 coherence::Coordinator& coord, sim::LatencyModel latency, NameNodeConfig cfg,
                                 std::uint64_t seed)
    : sim_(sim),
      store_(store),
      platform_(platform),
      coord_(coord),
      latency_(latency),
      cfg_(cfg),
      seed_(seed),
      n_deployments_(platform.config().n_deployments) {}

void NameNodeService::on_ready(const faas::Instance& inst) {
  State st;
  st.id = inst.id;
  st.deployment = inst.deployment;
  st.alive = std::make_shared<bool>(true);
  st.cache = std::make_unique<cache::CacheTrie>(cfg_.cache_capacity);
  st.rng = sim::Rng(sim::derive_seed(seed_, 3, inst.id));
  states_.emplace(inst.id, std::move(st));
  InstanceId id = inst.id;
  coord_.join(id, inst.deployment, [this, id](const coherence::Invalidation& inv) { on_invalidation(id, inv); });
}

void NameNodeService::on_terminate(const faas::Instance& inst) {
  auto it = states_.find(inst.id);
  if (it != states_.end()) {
    *it->second.alive = false;
    coord_.leave(inst.id);
    store_.abort_owner(inst.id);
    states_.erase(it);
  }
  auto w = helper_watch_.find(inst.id);
  if (w != helper_watch_.end()) {
    auto fns = std::move(w->second);
    helper_watch_.erase(w);
    for (auto& [token, fn] : fns) fn();
  }
}

bool NameNodeService::is_live(InstanceId id) const { return states_.count(id) != 0; }

int NameNodeService::deployment_of(InstanceId id) const {
  auto it = states_.find(id);
  return it == states_.end() ? -1 : it->second.deployment;
}

cache::CacheTrie* NameNodeService::cache(InstanceId id) {
  State* st = state(id);
  return st == nullptr ? nullptr : st->cache.get();
}

NameNodeService::State* NameNodeService::state(InstanceId id) {
  auto it = states_.find(id);
  return it == states_.end() ? nullptr : &it->second;
}

sim::Duration NameNodeService::store_half(State& st) {
  return std::max<sim::Duration>(1, latency_.sample(sim::LatencyKind::kStore, st.rng) / 2);
}

std::function<void()> NameNodeService::guard(State& st, std::function<void()> fn) {
  return [alive = st.alive, fn = std::move(fn)] {
    if (*alive) fn();
  };
}

void NameNodeService::at_store(State& st, sim::Duration extra, std::function<void()> fn) {
  sim_.schedule(store_half(st) + extra, sim::EventKind::kInternal, guard(st, std::move(fn)));
}

void NameNodeService::at_instance(State& st, sim::Duration extra, std::function<void()> fn) {
  sim_.schedule(store_half(st) + extra, sim::EventKind::kInternal, guard(st, std::move(fn)));
}

void NameNodeService::send_result(InstanceId inst, Reply done, OpResult r) {
  State* st = state(inst);
  if (st == nullptr) return;
  at_instance(*st, 0, [done = std::move(done), r = std::move(r)] { done(r); });
}

void NameNodeService::remember_result(State& st, const std::string& request_id, const OpResult& r) {
  sim::Time expires = sim_.now() + cfg_.result_cache_ttl;
  st.results[request_id] = CachedResult{r, expires};
  st.result_expiry.emplace_back(expires, request_id);
}

const OpResult* NameNodeService::recall_result(State& st, const std::string& request_id) {
  while (!st.result_expiry.empty() && st.result_expiry.front().first <= sim_.now()) {
    auto it = st.results.find(st.result_expiry.front().second);
    if (it != st.results.end() && it->second.expires <= sim_.now()) st.results.erase(it);
    st.result_expiry.pop_front();
  }
  auto it = st.results.find(request_id);
  return it == st.results.end() ? nullptr : &it->second.result;
}

void NameNodeService::handle(InstanceId id, RpcRequest req, Reply reply) {
  State* st = state(id);
  if (st == nullptr) {
    ++stats_.lost_requests;
    return;
  }
  ++stats_.requests;
  platform_.begin_activity(id);
  Reply done = [this, id, alive = st->alive, rid = req.request_id, kind = req.op.kind,
                reply = std::move(reply)](OpResult r) {
    if (!*alive) return;
    State* s = state(id);
    if (!is_read_op(kind) && is_final(r.status)) remember_result(*s, rid, r);
    platform_.end_activity(id);
    reply(std::move(r));
  };
  if (const OpResult* cached = recall_result(*st, req.request_id)) {
    ++stats_.result_cache_hits;
    platform_.cpu(id, cfg_.result_cache_cpu, guard(*st, [done, r = *cached] { done(r); }));
    return;
  }
  sim::Duration cost = cfg_.cpu_cost[static_cast<std::size_t>(req.op.kind)];
  platform_.cpu(id, cost, guard(*st, [this, id, req = std::move(req), done] {
                  State* s = state(id);
                  dispatch(*s, req, done);
                }));
}

void NameNodeService::dispatch(State& st, const RpcRequest& req, Reply done) {
  const FsOp& op = req.op;
  if (!path::is_normalized(op.path) || (op.kind == OpKind::kMv && !path::is_normalized(op.dst))) {
    done(status_only(FsStatus::kMalformedPath));
    return;
  }
  switch (op.kind) {
    case OpKind::kRead:
    case OpKind::kStat:
    case OpKind::kLs:
      serve_read(st, req, std::move(done));
      return;
    case OpKind::kMv:
      serve_subtree(st, req, std::move(done));
      return;
    case OpKind::kCreate:
    case OpKind::kMkdir:
    case OpKind::kDelete:
    case OpKind::kSetattr:
      serve_write(st, req, std::move(done));
      return;
  }
}

// ---- read path -------------------------------------------------------------

void NameNodeService::serve_read(State& st, const RpcRequest& req, Reply done) {
  const FsOp& op = req.op;
  const InstanceId id = st.id;
  const bool local = part::deployment_for(op.path, n_deployments_) == st.deployment;
  if (!local) ++stats_.foreign_requests;
  if (local) {
    auto lk = st.cache->lookup(op.path);
    if (lk.hit) {
      ++stats_.cache_hits;
      const INodeRecord leaf = lk.records.back();
      if (op.kind != OpKind::kLs || !leaf.is_dir()) {
        done(ok_from(leaf, 0));
        return;
      }
      at_store(st, 0, [this, id, leaf, done] {
        std::size_t n = store_.child_count(leaf.id);
        send_result(id, done, ok_from(leaf, n));
      });
      return;
    }
    ++stats_.cache_misses;
  }
  at_store(st, 0, [this, id, req, local, done] {
    TxnId txn = store_.begin(id);
    store_read(id, txn, req.op.path, local, 0, [this, id, txn, req, local, done](StoreError err, Resolution res) {
      State* s = state(id);
      if (s == nullptr) return;
      if (err != StoreError::kNone) {
        store_.close(txn);
        send_result(id, done, status_only(FsStatus::kTransportFailure));
        return;
      }
      std::size_t children = 0;
      if (req.op.kind == OpKind::kLs && res.complete && res.leaf().is_dir()) children = store_.child_count(res.leaf().id);
      at_instance(*s, 0, [this, id, txn, res = std::move(res), children, local, done] {
        State* s2 = state(id);
        if (local && res.complete) s2->cache->insert_path(res.records, sim_.now());
        store_.close(txn);
        done(res.complete ? ok_from(res.leaf(), children) : status_only(miss_status(res)));
      });
    });
  });
}

void NameNodeService::store_read(InstanceId inst, TxnId txn, std::string p, bool lock, int attempt,
                                 std::function<void(StoreError, Resolution)> cb) {
  if (attempt > cfg_.max_revalidations) {
    cb(StoreError::kLockTimeout, {});
    return;
  }
  Resolution res = store_.resolve_path_batch(p);
  if (auto blk = store_.blocking_subtree_op(res, "")) {
    store_.wait_subtree_clear(*blk, inst, [this, inst, txn, p, lock, attempt, cb](bool ok) {
      if (!is_live(inst)) return;
      if (!ok) {
        cb(StoreError::kLockTimeout, {});
        return;
      }
      store_read(inst, txn, p, lock, attempt + 1, cb);
    });
    return;
  }
  if (!lock || !res.complete) {
    cb(StoreError::kNone, std::move(res));
    return;
  }
  std::vector<INodeId> ids = ids_of(res);
  store_.lock_shared_all(txn, ids, [this, inst, txn, p, lock, attempt, ids, cb](StoreError err) {
    if (!is_live(inst)) return;
    if (err != StoreError::kNone) {
      cb(err, {});
      return;
    }
    Resolution fresh = store_.resolve_path_batch(p);
    if (ids_of(fresh) != ids || store_.blocking_subtree_op(fresh, "")) {
      store_.release_locks(txn);
      store_read(inst, txn, p, lock, attempt + 1, cb);
      return;
    }
    cb(StoreError::kNone, std::move(fresh));
  });
}

// ---- single-INode writes ---------------------------------------------------

void NameNodeService::serve_write(State& st, const RpcRequest& req, Reply done) {
  const FsOp& op = req.op;
  if (op.path == "/") {
    if (op.kind == OpKind::kCreate || op.kind == OpKind::kMkdir) {
      done(status_only(FsStatus::kAlreadyExists));
      return;
    }
    if (op.kind == OpKind::kDelete) {
      done(status_only(FsStatus::kInvalidMove));
      return;
    }
  }
  auto ctx = std::make_shared<WriteCtx>();
  ctx->inst = st.id;
  ctx->req = req;
  ctx->done = std::move(done);
  at_store(st, 0, [this, ctx] {
    ctx->txn = store_.begin(ctx->inst);
    write_attempt(ctx);
  });
}

void NameNodeService::write_attempt(std::shared_ptr<WriteCtx> ctx) {
  auto reply = [this, ctx](OpResult r) {
    store_.close(ctx->txn);
    send_result(ctx->inst, ctx->done, std::move(r));
  };
  if (++ctx->attempts > cfg_.max_revalidations) {
    reply(status_only(FsStatus::kTransportFailure));
    return;
  }
  const FsOp& op = ctx->req.op;
  const bool on_parent = op.kind != OpKind::kSetattr;
  Resolution res = store_.resolve_path_batch(on_parent ? std::string(path::parent(op.path)) : op.path);
  if (auto blk = store_.blocking_subtree_op(res, "")) {
    store_.wait_subtree_clear(*blk, ctx->inst, [this, ctx, reply](bool ok) {
      if (!is_live(ctx->inst)) return;
      if (!ok) {
        reply(status_only(FsStatus::kTransportFailure));
        return;
      }
      write_attempt(ctx);
    });
    return;
  }
  auto missing = [&](FsStatus s) {
    if (const OpResult* prior = store_.committed_result(ctx->req.request_id)) {
      ++stats_.retry_table_hits;
      reply(*prior);
      return;
    }
    reply(status_only(s));
  };
  if (!res.complete) {
    missing(miss_status(res));
    return;
  }
  if (on_parent && !res.leaf().is_dir()) {
    missing(FsStatus::kNotDirectory);
    return;
  }
  ctx->lock_ids = {res.leaf().id};
  if (op.kind == OpKind::kDelete) {
    auto target = store_.child(res.leaf().id, path::basename(op.path));
    if (!target) {
      missing(FsStatus::kNotFound);
      return;
    }
    const store::INodeRecord* rec = store_.get(*target);
    if (rec != nullptr && rec->subtree_locked) {
      store_.wait_subtree_clear(rec->subtree_op, ctx->inst, [this, ctx, reply](bool ok) {
        if (!is_live(ctx->inst)) return;
        if (!ok) {
          reply(status_only(FsStatus::kTransportFailure));
          return;
        }
        write_attempt(ctx);
      });
      return;
    }
    ctx->lock_ids.push_back(*target);
  }
  store_.lock_exclusive(ctx->txn, ctx->lock_ids, [this, ctx, reply](StoreError err) {
    if (!is_live(ctx->inst)) return;
    if (err != StoreError::kNone) {
      reply(status_only(FsStatus::kTransportFailure));
      return;
    }
    write_locked(ctx);
  });
}

void NameNodeService::write_locked(std::shared_ptr<WriteCtx> ctx) {
  auto reply = [this, ctx](OpResult r) {
    store_.close(ctx->txn);
    send_result(ctx->inst, ctx->done, std::move(r));
  };
  const FsOp& op = ctx->req.op;
  const bool on_parent = op.kind != OpKind::kSetattr;
  Resolution res = store_.resolve_path_batch(on_parent ? std::string(path::parent(op.path)) : op.path);
  bool same = res.complete && res.leaf().id == ctx->lock_ids[0] && !store_.blocking_subtree_op(res, "");
  std::optional<INodeId> target;
  if (same && on_parent) target = store_.child(res.leaf().id, path::basename(op.path));
  if (same && op.kind == OpKind::kDelete) {
    const store::INodeRecord* rec = target ? store_.get(*target) : nullptr;
    same = target && *target == ctx->lock_ids[1] && rec != nullptr && !rec->subtree_locked;
  }
  if (!same) {
    store_.release_locks(ctx->txn);
    write_attempt(ctx);
    return;
  }
  if (const OpResult* prior = store_.committed_result(ctx->req.request_id)) {
    ++stats_.retry_table_hits;
    reply(*prior);
    return;
  }
  const sim::Time now = sim_.now();
  const std::string& p = op.path;
  ctx->targets = {part::deployment_for(p, n_deployments_)};
  switch (op.kind) {
    case OpKind::kCreate:
    case OpKind::kMkdir: {
      if (target) {
        reply(status_only(FsStatus::kAlreadyExists));
        return;
      }
      INodeRecord rec;
      rec.id = store_.allocate_id();
      rec.parent = res.leaf().id;
      rec.name = std::string(path::basename(p));
      rec.kind = op.kind == OpKind::kMkdir ? NodeKind::kDirectory : NodeKind::kFile;
      rec.perms = op.perms;
      rec.mtime = now;
      ctx->record = rec;
      ctx->result = ok_from(rec, 0);
      if (rec.is_dir()) ctx->targets.insert(part::children_deployment(p, n_deployments_));
      break;
    }
    case OpKind::kDelete: {
      const INodeRecord& rec = *store_.get(*target);
      if (rec.is_dir() && store_.child_count(rec.id) != 0) {
        store_.close(ctx->txn);
        auto sub = std::make_shared<SubtreeCtx>();
        sub->leader = ctx->inst;
        sub->req = ctx->req;
        sub->done = ctx->done;
        sub->kind = store::SubtreeKind::kDelete;
        sub->src = p;
        ++stats_.subtree_ops;
        subtree_phase1(sub);
        return;
      }
      ctx->erase = true;
      ctx->record = rec;
      ctx->result = ok_from(rec, 0);
      if (rec.is_dir()) ctx->targets.insert(part::children_deployment(p, n_deployments_));
      break;
    }
    case OpKind::kSetattr: {
      INodeRecord rec = res.leaf();
      rec.mtime = now;
      if (op.perms != 0) rec.perms = op.perms;
      rec.subtree_locked = false;
      rec.subtree_op.clear();
      ctx->record = rec;
      ctx->result = ok_from(rec, 0);
      if (rec.is_dir()) {
        if (store_.child_count(rec.id) != 0) {
          for (int d = 0; d < n_deployments_; ++d) ctx->targets.insert(d);
        } else {
          ctx->targets.insert(part::children_deployment(p, n_deployments_));
        }
      }
      break;
    }
    default:
      reply(status_only(FsStatus::kInvalidMove));
      return;
  }
  State* st = state(ctx->inst);
  if (st == nullptr) return;
  at_instance(*st, 0, [this, ctx] { write_round(ctx); });
}

void NameNodeService::write_round(std::shared_ptr<WriteCtx> ctx) {
  State* st = state(ctx->inst);
  st->cache->invalidate(ctx->req.op.path);
  coherence::Invalidation inv;
  inv.kind = coherence::Invalidation::Kind::kPoint;
  inv.paths = {ctx->req.op.path};
  coord_.run_round(ctx->inst, ctx->targets, inv, ctx->req.request_id, [this, ctx](bool ok) {
    State* s = state(ctx->inst);
    if (s == nullptr) return;
    at_store(*s, 0, [this, ctx, ok] {
      if (!ok || !store_.is_open(ctx->txn)) {
        store_.abort(ctx->txn);
        send_result(ctx->inst, ctx->done, status_only(FsStatus::kTransportFailure));
        return;
      }
      if (ctx->erase) {
        store_.erase(ctx->txn, ctx->record.id);
      } else {
        store_.put(ctx->txn, ctx->record);
      }
      store_.record_result(ctx->txn, ctx->req.request_id, ctx->result);
      store_.commit(ctx->txn);
      send_result(ctx->inst, ctx->done, ctx->result);
    });
  });
}

// ---- subtree operations ----------------------------------------------------

void NameNodeService::serve_subtree(State& st, const RpcRequest& req, Reply done) {
  const FsOp& op = req.op;
  if (op.path == "/" || path::has_prefix(op.dst, op.path)) {
    done(status_only(FsStatus::kInvalidMove));
    return;
  }
  if (op.dst == "/") {
    done(status_only(FsStatus::kAlreadyExists));
    return;
  }
  auto ctx = std::make_shared<SubtreeCtx>();
  ctx->leader = st.id;
  ctx->req = req;
  ctx->done = std::move(done);
  ctx->kind = store::SubtreeKind::kMv;
  ctx->src = op.path;
  ++stats_.subtree_ops;
  at_store(st, 0, [this, ctx] { subtree_phase1(ctx); });
}

void NameNodeService::subtree_phase1(std::shared_ptr<SubtreeCtx> ctx) {
  const std::string& rid = ctx->req.request_id;
  auto reply = [this, ctx](OpResult r) {
    store_.clear_subtree_lock(ctx->req.request_id);
    send_result(ctx->leader, ctx->done, std::move(r));
  };
  auto retry_later = [this, ctx, reply](const std::string& op) {
    store_.wait_subtree_clear(op, ctx->leader, [this, ctx, reply](bool ok) {
      if (!is_live(ctx->leader)) return;
      if (!ok) {
        reply(status_only(FsStatus::kTransportFailure));
        return;
      }
      subtree_phase1(ctx);
    });
  };
  if (++ctx->attempts > cfg_.max_revalidations) {
    reply(status_only(FsStatus::kTransportFailure));
    return;
  }
  const bool is_mv = ctx->kind == store::SubtreeKind::kMv;
  Resolution sres = store_.resolve_path_batch(ctx->src);
  Resolution dres;
  if (is_mv) dres = store_.resolve_path_batch(path::parent(ctx->req.op.dst));
  if (auto blk = store_.blocking_subtree_op(sres, rid)) {
    retry_later(*blk);
    return;
  }
  if (is_mv) {
    if (auto blk = store_.blocking_subtree_op(dres, rid)) {
      retry_later(*blk);
      return;
    }
  }
  if (const OpResult* prior = store_.committed_result(rid)) {
    ++stats_.retry_table_hits;
    reply(*prior);
    return;
  }
  if (!sres.complete) {
    reply(status_only(miss_status(sres)));
    return;
  }
  if (is_mv) {
    if (!dres.complete) {
      reply(status_only(miss_status(dres)));
      return;
    }
    if (!dres.leaf().is_dir()) {
      reply(status_only(FsStatus::kNotDirectory));
      return;
    }
    if (store_.is_ancestor_or_self(sres.leaf().id, dres.leaf().id)) {
      reply(status_only(FsStatus::kInvalidMove));
      return;
    }
    if (store_.child(dres.leaf().id, path::basename(ctx->req.op.dst))) {
      reply(status_only(FsStatus::kAlreadyExists));
      return;
    }
  }
  INodeId root = sres.leaf().id;
  TxnId txn = store_.begin(ctx->leader);
  store_.lock_exclusive(txn, {root}, [this, ctx, txn, root, reply, retry_later](StoreError err) {
    if (!is_live(ctx->leader)) return;
    if (err != StoreError::kNone) {
      store_.close(txn);
      reply(status_only(FsStatus::kTransportFailure));
      return;
    }
    Resolution again = store_.resolve_path_batch(ctx->src);
    const std::string& rid = ctx->req.request_id;
    if (!again.complete || again.leaf().id != root || store_.blocking_subtree_op(again, rid)) {
      store_.close(txn);
      subtree_phase1(ctx);
      return;
    }
    if (const OpResult* prior = store_.committed_result(rid)) {
      store_.close(txn);
      ++stats_.retry_table_hits;
      reply(*prior);
      return;
    }
    store::SubtreeOpEntry entry;
    entry.op_id = rid;
    entry.root = root;
    entry.kind = ctx->kind;
    entry.owner = ctx->leader;
    StoreError e = store_.set_subtree_lock(txn, entry);
    store_.close(txn);
    if (e == StoreError::kSubtreeConflict) {
      reply(status_only(FsStatus::kSubtreeConflict));
      return;
    }
    if (e == StoreError::kInProgress) {
      retry_later(rid);
      return;
    }
    ctx->root = root;
    subtree_phase2(ctx);
  });
}

void NameNodeService::subtree_phase2(std::shared_ptr<SubtreeCtx> ctx) {
  TxnId txn = store_.begin(ctx->leader);
  store_.quiesce_subtree(txn, ctx->root, [this, ctx, txn](StoreError err, store::SubtreeDescription desc) {
    if (!is_live(ctx->leader)) return;
    store_.close(txn);
    if (err != StoreError::kNone || desc.nodes.empty()) {
      subtree_fail(ctx, FsStatus::kTransportFailure);
      return;
    }
    ctx->desc = std::move(desc);
    part::DeploymentSet caching(n_deployments_);
    for (const auto& n : ctx->desc.nodes) caching.add_path(n.path, n.kind == NodeKind::kDirectory);
    std::set<int> targets = caching.members();
    State* st = state(ctx->leader);
    sim::Duration scan = static_cast<sim::Duration>(ctx->desc.nodes.size()) * cfg_.per_row_cost;
    at_instance(*st, scan, [this, ctx, targets] {
      State* s = state(ctx->leader);
      const std::string& root_path = ctx->desc.nodes.front().path;
      s->cache->invalidate_prefix(root_path);
      ++stats_.prefix_invalidations;
      coherence::Invalidation inv;
      inv.kind = coherence::Invalidation::Kind::kPrefix;
      inv.paths = {root_path};
      coord_.run_round(ctx->leader, targets, inv, ctx->req.request_id, [this, ctx](bool ok) {
        if (!is_live(ctx->leader)) return;
        if (!ok) {
          subtree_fail(ctx, FsStatus::kTransportFailure);
          return;
        }
        subtree_phase3(ctx);
      });
    });
  });
}

void NameNodeService::subtree_phase3(std::shared_ptr<SubtreeCtx> ctx) {
  const auto& nodes = ctx->desc.nodes;
  ctx->order.clear();
  for (std::size_t i = 1; i < nodes.size(); ++i) ctx->order.push_back(i);
  if (ctx->kind == store::SubtreeKind::kDelete) {
    std::stable_sort(ctx->order.begin(), ctx->order.end(),
                     [&](std::size_t a, std::size_t b) { return nodes[a].depth > nodes[b].depth; });
  }
  ctx->batches = coherence::make_batches(ctx->order.size(), cfg_.subtree_batch_size);
  stats_.subtree_batches += ctx->batches.size();
  ctx->waves.clear();
  ctx->wave = 0;
  std::size_t wave_max_depth = 0;
  for (std::size_t b = 0; b < ctx->batches.size(); ++b) {
    auto [lo, hi] = ctx->batches[b];
    std::size_t max_depth = nodes[ctx->order[lo]].depth;
    std::size_t min_depth = nodes[ctx->order[hi - 1]].depth;
    bool new_wave = ctx->waves.empty();
    if (!new_wave && ctx->kind == store::SubtreeKind::kDelete) new_wave = wave_max_depth > min_depth;
    if (new_wave) {
      ctx->waves.emplace_back();
      wave_max_depth = max_depth;
    }
    ctx->waves.back().push_back(b);
  }
  State* st = state(ctx->leader);
  ctx->helper_deps = coherence::helper_deployment_order(st->deployment, n_deployments_);
  ctx->helper_cursor = 0;
  subtree_run_wave(ctx);
}

void NameNodeService::subtree_run_wave(std::shared_ptr<SubtreeCtx> ctx) {
  if (ctx->wave >= ctx->waves.size()) {
    State* st = state(ctx->leader);
    at_store(*st, 0, [this, ctx] { subtree_final(ctx); });
    return;
  }
  const auto& wave = ctx->waves[ctx->wave];
  ctx->pending = wave.size();
  for (std::size_t b : wave) {
    InstanceId executor = ctx->leader;
    if (ctx->batches.size() > 1 && !ctx->helper_deps.empty()) {
      for (std::size_t tries = 0; tries < ctx->helper_deps.size(); ++tries) {
        int dep = ctx->helper_deps[ctx->helper_cursor++ % ctx->helper_deps.size()];
        if (auto h = platform_.acquire_helper(dep)) {
          executor = *h;
          break;
        }
      }
    }
    run_batch(ctx, b, executor);
  }
}

void NameNodeService::store_batch(std::shared_ptr<SubtreeCtx> ctx, std::size_t batch, InstanceId executor,
                                  std::function<void(bool)> cb) {
  auto [lo, hi] = ctx->batches[batch];
  std::vector<INodeId> ids;
  for (std::size_t i = lo; i < hi; ++i) ids.push_back(ctx->desc.nodes[ctx->order[i]].id);
  TxnId txn = store_.begin(executor);
  store_.set_tag(txn, ctx->req.request_id);
  store_.lock_exclusive(txn, ids, [this, ctx, txn, ids, executor, cb](StoreError err) {
    if (!is_live(executor)) return;
    if (err != StoreError::kNone) {
      store_.abort(txn);
      cb(false);
      return;
    }
    for (INodeId id : ids) {
      const INodeRecord* rec = store_.get(id);
      if (rec == nullptr) continue;
      if (ctx->kind == store::SubtreeKind::kDelete) {
        store_.erase(txn, id);
      } else {
        store_.put(txn, *rec);
      }
    }
    store_.commit(txn);
    cb(true);
  });
}

void NameNodeService::run_batch(std::shared_ptr<SubtreeCtx> ctx, std::size_t batch, InstanceId executor) {
  auto [lo, hi] = ctx->batches[batch];
  sim::Duration rows = static_cast<sim::Duration>(hi - lo) * cfg_.per_row_cost;
  State* leader = state(ctx->leader);
  if (executor == ctx->leader) {
    at_store(*leader, 0, [this, ctx, batch, rows] {
      store_batch(ctx, batch, ctx->leader, [this, ctx, rows](bool ok) {
        State* s = state(ctx->leader);
        if (s == nullptr) return;
        at_instance(*s, rows, [this, ctx, ok] { batch_done(ctx, ok); });
      });
    });
    return;
  }
  ++stats_.offloaded_batches;
  auto settled = std::make_shared<bool>(false);
  auto finish = [this, ctx, settled](bool ok) {
    if (*settled) return;
    *settled = true;
    if (!is_live(ctx->leader)) return;
    batch_done(ctx, ok);
  };
  std::uint64_t token = next_watch_++;
  helper_watch_[executor][token] = [finish] { finish(false); };
  auto unwatch = [this, executor, token] {
    auto it = helper_watch_.find(executor);
    if (it == helper_watch_.end()) return;
    it->second.erase(token);
    if (it->second.empty()) helper_watch_.erase(it);
  };
  sim::Duration leg = std::max<sim::Duration>(1, latency_.sample(sim::LatencyKind::kTcp, leader->rng) / 2);
  sim_.schedule(leg, sim::EventKind::kInternal, [this, ctx, batch, executor, rows, finish, unwatch] {
    platform_.when_ready(executor, [this, ctx, batch, executor, rows, finish, unwatch] {
      State* h = state(executor);
      if (h == nullptr) return;
      platform_.begin_activity(executor);
      at_store(*h, 0, [this, ctx, batch, executor, rows, finish, unwatch] {
        store_batch(ctx, batch, executor, [this, executor, rows, finish, unwatch](bool ok) {
          State* h2 = state(executor);
          if (h2 == nullptr) return;
          at_instance(*h2, rows, [this, executor, finish, unwatch, ok] {
            platform_.end_activity(executor);
            State* h3 = state(executor);
            sim::Duration back = std::max<sim::Duration>(1, latency_.sample(sim::LatencyKind::kTcp, h3->rng) / 2);
            unwatch();
            sim_.schedule(back, sim::EventKind::kInternal, [finish, ok] { finish(ok); });
          });
        });
      });
    });
  });
}

void NameNodeService::batch_done(std::shared_ptr<SubtreeCtx> ctx, bool ok) {
  if (!ok) ctx->failed = true;
  if (--ctx->pending != 0) return;
  if (ctx->failed) {
    subtree_fail(ctx, FsStatus::kTransportFailure);
    return;
  }
  ++ctx->wave;
  subtree_run_wave(ctx);
}

void NameNodeService::subtree_final(std::shared_ptr<SubtreeCtx> ctx) {
  const std::string& rid = ctx->req.request_id;
  const INodeRecord* root = store_.get(ctx->root);
  if (root == nullptr) {
    subtree_fail(ctx, FsStatus::kTransportFailure);
    return;
  }
  std::vector<INodeId> ids = {root->parent, ctx->root};
  INodeId dst_parent = kNoINode;
  if (ctx->kind == store::SubtreeKind::kMv) {
    Resolution dres = store_.resolve_path_batch(path::parent(ctx->req.op.dst));
    if (!dres.complete || !dres.leaf().is_dir()) {
      OpResult r = status_only(dres.complete ? FsStatus::kNotDirectory : miss_status(dres));
      store_.clear_subtree_lock(rid);
      send_result(ctx->leader, ctx->done, r);
      return;
    }
    if (store_.blocking_subtree_op(dres, rid)) {
      subtree_fail(ctx, FsStatus::kTransportFailure);
      return;
    }
    dst_parent = dres.leaf().id;
    ids.push_back(dst_parent);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  TxnId txn = store_.begin(ctx->leader);
  store_.set_tag(txn, rid);
  store_.lock_exclusive(txn, ids, [this, ctx, txn, dst_parent](StoreError err) {
    if (!is_live(ctx->leader)) return;
    const std::string& rid = ctx->req.request_id;
    if (err != StoreError::kNone) {
      store_.abort(txn);
      subtree_fail(ctx, FsStatus::kTransportFailure);
      return;
    }
    const INodeRecord* root = store_.get(ctx->root);
    OpResult result;
    if (ctx->kind == store::SubtreeKind::kDelete) {
      if (root == nullptr || store_.child_count(ctx->root) != 0) {
        store_.abort(txn);
        subtree_fail(ctx, FsStatus::kTransportFailure);
        return;
      }
      result = ok_from(*root, 0);
      store_.erase(txn, ctx->root);
    } else {
      std::string name(path::basename(ctx->req.op.dst));
      const INodeRecord* dp = store_.get(dst_parent);
      Resolution dres = store_.resolve_path_batch(path::parent(ctx->req.op.dst));
      bool dst_moved = !dres.complete || dres.leaf().id != dst_parent || store_.blocking_subtree_op(dres, rid);
      if (root == nullptr || dp == nullptr || dst_moved || !dp->is_dir() ||
          store_.is_ancestor_or_self(ctx->root, dst_parent)) {
        store_.abort(txn);
        subtree_fail(ctx, FsStatus::kTransportFailure);
        return;
      }
      if (store_.child(dst_parent, name)) {
        store_.close(txn);
        store_.clear_subtree_lock(rid);
        send_result(ctx->leader, ctx->done, status_only(FsStatus::kAlreadyExists));
        return;
      }
      INodeRecord moved = *root;
      moved.parent = dst_parent;
      moved.name = name;
      result = ok_from(moved, 0);
      store_.put(txn, moved);
    }
    store_.record_result(txn, rid, result);
    store_.clear_subtree_on_commit(txn, rid);
    store_.commit(txn);
    send_result(ctx->leader, ctx->done, result);
  });
}

void NameNodeService::subtree_fail(std::shared_ptr<SubtreeCtx> ctx, FsStatus status) {
  store_.clear_subtree_lock(ctx->req.request_id);
  send_result(ctx->leader, ctx->done, status_only(status));
}

// ---- invalidation ----------------------------------------------------------

void NameNodeService::on_invalidation(InstanceId id, const coherence::Invalidation& inv) {
  State* st = state(id);
  if (st == nullptr || cfg_.inject_stale_read) return;
  for (const auto& p : inv.paths) {
    if (inv.kind == coherence::Invalidation::Kind::kPrefix) {
      st->cache->invalidate_prefix(p);
    } else {
      st->cache->invalidate(p);
    }
  }
}

}  // namespace lfs::nn
