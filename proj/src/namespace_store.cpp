#include "lambdafs/namespace_store.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lambdafs/path.hpp"

namespace lfs::store {

std::string_view to_string(StoreError e) {
  switch (e) {
    case StoreError::kNone: return "none";
    case StoreError::kMalformedPath: return "malformed_path";
    case StoreError::kTxnAborted: return "txn_aborted";
    case StoreError::kLockTimeout: return "lock_timeout";
    case StoreError::kSubtreeConflict: return "subtree_conflict";
    case StoreError::kInProgress: return "in_progress";
  }
  return "unknown";
}

MetadataStore::MetadataStore(sim::Simulator& sim, StoreConfig cfg) : sim_(sim), cfg_(cfg) {
  INodeRecord root;
  root.id = kRootId;
  root.parent = kRootId;
  root.name = "";
  root.kind = NodeKind::kDirectory;
  root.perms = 0755;
  records_.emplace(kRootId, root);
  children_[kRootId];
}

// ---- direct access ---------------------------------------------------------

const INodeRecord* MetadataStore::get(INodeId id) const {
  auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

std::optional<INodeId> MetadataStore::child(INodeId dir, std::string_view name) const {
  auto it = children_.find(dir);
  if (it == children_.end()) return std::nullopt;
  auto c = it->second.find(name);
  if (c == it->second.end()) return std::nullopt;
  return c->second;
}

std::vector<INodeId> MetadataStore::children(INodeId dir) const {
  std::vector<INodeId> out;
  auto it = children_.find(dir);
  if (it == children_.end()) return out;
  out.reserve(it->second.size());
  for (const auto& [name, id] : it->second) out.push_back(id);
  return out;
}

std::size_t MetadataStore::child_count(INodeId dir) const {
  auto it = children_.find(dir);
  return it == children_.end() ? 0 : it->second.size();
}

Resolution MetadataStore::resolve_path_batch(std::string_view p) const {
  Resolution res;
  if (!path::is_normalized(p)) return res;
  const INodeRecord* cur = get(kRootId);
  res.records.push_back(*cur);
  std::size_t depth = 0;
  for (auto comp : path::components(p)) {
    ++depth;
    if (!cur->is_dir()) {
      res.miss_depth = depth;
      return res;
    }
    auto next = child(cur->id, comp);
    if (!next) {
      res.miss_depth = depth;
      return res;
    }
    cur = get(*next);
    res.records.push_back(*cur);
  }
  res.complete = true;
  res.miss_depth = res.records.size();
  return res;
}

std::string MetadataStore::path_of(INodeId id) const {
  std::vector<std::string_view> names;
  const INodeRecord* cur = get(id);
  if (cur == nullptr) return {};
  while (cur->id != kRootId) {
    names.push_back(cur->name);
    cur = get(cur->parent);
    if (cur == nullptr) return {};
  }
  if (names.empty()) return "/";
  std::string out;
  for (auto it = names.rbegin(); it != names.rend(); ++it) {
    out += '/';
    out += *it;
  }
  return out;
}

bool MetadataStore::is_ancestor_or_self(INodeId ancestor, INodeId node) const {
  const INodeRecord* cur = get(node);
  while (cur != nullptr) {
    if (cur->id == ancestor) return true;
    if (cur->id == kRootId) return false;
    cur = get(cur->parent);
  }
  return false;
}

INodeId MetadataStore::create_direct(INodeId parent, std::string name, NodeKind kind, sim::Time mtime) {
  const INodeRecord* p = get(parent);
  if (p == nullptr || !p->is_dir()) throw std::invalid_argument("create_direct: parent is not a directory");
  if (name.empty() || name.find('/') != std::string::npos) throw std::invalid_argument("create_direct: bad name");
  if (child(parent, name)) throw std::invalid_argument("create_direct: duplicate name " + name);
  INodeRecord rec;
  rec.id = allocate_id();
  rec.parent = parent;
  rec.name = std::move(name);
  rec.kind = kind;
  rec.perms = kind == NodeKind::kDirectory ? 0755 : 0644;
  rec.mtime = mtime;
  link_child(rec);
  if (rec.is_dir()) children_[rec.id];
  INodeId id = rec.id;
  records_.emplace(id, std::move(rec));
  return id;
}

std::vector<INodeRecord> MetadataStore::snapshot() const {
  std::vector<INodeRecord> out;
  out.reserve(records_.size());
  for (const auto& [id, rec] : records_) out.push_back(rec);
  std::sort(out.begin(), out.end(), [](const INodeRecord& a, const INodeRecord& b) { return a.id < b.id; });
  return out;
}

std::string MetadataStore::snapshot_jsonl() const {
  std::ostringstream os;
  for (const auto& rec : snapshot()) {
    nlohmann::json j = {
        {"id", to_u64(rec.id)},
        {"parent", to_u64(rec.parent)},
        {"name", rec.name},
        {"path", path_of(rec.id)},
        {"kind", rec.is_dir() ? "directory" : "file"},
        {"perms", rec.perms},
        {"mtime", rec.mtime},
        {"subtree_lock", rec.subtree_locked},
    };
    if (rec.subtree_locked) j["subtree_op"] = rec.subtree_op;
    os << j.dump() << '\n';
  }
  return os.str();
}

// ---- transactions ----------------------------------------------------------

TxnId MetadataStore::begin(OwnerId owner) {
  TxnId id = next_txn_++;
  Txn t;
  t.id = id;
  t.owner = owner;
  txns_.emplace(id, std::move(t));
  return id;
}

bool MetadataStore::is_open(TxnId txn) const { return find_txn(txn) != nullptr; }

OwnerId MetadataStore::owner_of(TxnId txn) const {
  const Txn* t = find_txn(txn);
  if (t == nullptr) throw std::logic_error("owner_of: unknown txn");
  return t->owner;
}

MetadataStore::Txn& MetadataStore::txn_ref(TxnId txn) {
  auto it = txns_.find(txn);
  if (it == txns_.end()) throw std::logic_error("store: txn is not open");
  return it->second;
}

const MetadataStore::Txn* MetadataStore::find_txn(TxnId txn) const {
  auto it = txns_.find(txn);
  return it == txns_.end() ? nullptr : &it->second;
}

void MetadataStore::lock_exclusive(TxnId txn, std::vector<INodeId> ids, Done done) {
  Txn& t = txn_ref(txn);
  if (t.waiting || t.pending_done) throw std::logic_error("lock_exclusive: acquisition already pending");
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  t.pending_ids = std::move(ids);
  t.pending_index = 0;
  t.pending_done = std::move(done);
  t.wait_shared = false;
  continue_exclusive(t);
}

void MetadataStore::continue_exclusive(Txn& t) {
  while (t.pending_index < t.pending_ids.size()) {
    INodeId id = t.pending_ids[t.pending_index];
    if (t.exclusive.count(id) != 0) {
      ++t.pending_index;
      continue;
    }
    LockState& l = locks_[id];
    bool compatible = l.exclusive == 0 && (l.shared.empty() || (l.shared.size() == 1 && *l.shared.begin() == t.id));
    if (compatible && l.waiters.empty()) {
      l.shared.erase(t.id);
      t.shared.erase(id);
      l.exclusive = t.id;
      t.exclusive.insert(id);
      ++t.pending_index;
      continue;
    }
    enqueue_wait(t, id);
    return;
  }
  Done done = std::move(t.pending_done);
  t.pending_done = nullptr;
  t.pending_ids.clear();
  done(StoreError::kNone);
}

void MetadataStore::lock_shared_all(TxnId txn, std::vector<INodeId> ids, Done done) {
  Txn& t = txn_ref(txn);
  if (t.waiting || t.pending_done) throw std::logic_error("lock_shared_all: acquisition already pending");
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  t.pending_ids = std::move(ids);
  t.pending_done = std::move(done);
  t.wait_shared = true;
  try_shared(t);
}

void MetadataStore::try_shared(Txn& t) {
  for (INodeId id : t.pending_ids) {
    if (t.exclusive.count(id) != 0 || t.shared.count(id) != 0) continue;
    auto it = locks_.find(id);
    if (it == locks_.end()) continue;
    const LockState& l = it->second;
    if ((l.exclusive != 0 && l.exclusive != t.id) || !l.waiters.empty()) {
      enqueue_wait(t, id);
      return;
    }
  }
  for (INodeId id : t.pending_ids) {
    if (t.exclusive.count(id) != 0) continue;
    locks_[id].shared.insert(t.id);
    t.shared.insert(id);
  }
  Done done = std::move(t.pending_done);
  t.pending_done = nullptr;
  t.pending_ids.clear();
  done(StoreError::kNone);
}

void MetadataStore::enqueue_wait(Txn& t, INodeId id) {
  ++stats_.lock_waits;
  locks_[id].waiters.push_back(t.id);
  t.waiting = true;
  t.waiting_on = id;
  TxnId txn = t.id;
  t.wait_timer = sim_.schedule(cfg_.lock_wait_timeout, sim::EventKind::kTimeout, [this, txn] { on_wait_timeout(txn); });
}

void MetadataStore::on_wait_timeout(TxnId txn) {
  auto it = txns_.find(txn);
  if (it == txns_.end() || !it->second.waiting) return;
  Txn& t = it->second;
  ++stats_.lock_timeouts;
  INodeId id = t.waiting_on;
  auto& waiters = locks_[id].waiters;
  waiters.erase(std::remove(waiters.begin(), waiters.end(), txn), waiters.end());
  t.waiting = false;
  t.wait_timer = {};
  Done done = std::move(t.pending_done);
  t.pending_done = nullptr;
  wake(id);
  finish(t, TxnState::kAborted);
  if (done) done(StoreError::kLockTimeout);
}

bool MetadataStore::holds_exclusive(TxnId txn, INodeId id) const {
  const Txn* t = find_txn(txn);
  return t != nullptr && t->exclusive.count(id) != 0;
}

bool MetadataStore::holds_shared(TxnId txn, INodeId id) const {
  const Txn* t = find_txn(txn);
  return t != nullptr && t->shared.count(id) != 0;
}

void MetadataStore::release_locks(TxnId txn) {
  Txn& t = txn_ref(txn);
  if (t.waiting) throw std::logic_error("release_locks: acquisition pending");
  release_all(t);
}

void MetadataStore::release_all(Txn& t) {
  if (t.waiting) {
    auto& waiters = locks_[t.waiting_on].waiters;
    waiters.erase(std::remove(waiters.begin(), waiters.end(), t.id), waiters.end());
    sim_.cancel(t.wait_timer);
    t.waiting = false;
    INodeId id = t.waiting_on;
    t.waiting_on = kNoINode;
    wake(id);
  }
  t.pending_done = nullptr;
  t.pending_ids.clear();
  std::vector<INodeId> held(t.exclusive.begin(), t.exclusive.end());
  held.insert(held.end(), t.shared.begin(), t.shared.end());
  t.exclusive.clear();
  t.shared.clear();
  std::sort(held.begin(), held.end());
  for (INodeId id : held) release_one(t.id, id);
}

void MetadataStore::release_one(TxnId txn, INodeId id) {
  auto it = locks_.find(id);
  if (it == locks_.end()) return;
  LockState& l = it->second;
  if (l.exclusive == txn) l.exclusive = 0;
  l.shared.erase(txn);
  wake(id);
}

void MetadataStore::wake(INodeId id) {
  auto it = locks_.find(id);
  if (it == locks_.end()) return;
  LockState& l = it->second;
  while (!l.waiters.empty()) {
    TxnId w = l.waiters.front();
    auto wt = txns_.find(w);
    if (wt == txns_.end()) {
      l.waiters.pop_front();
      continue;
    }
    Txn& t = wt->second;
    if (!t.wait_shared) {
      bool compatible = l.exclusive == 0 && (l.shared.empty() || (l.shared.size() == 1 && *l.shared.begin() == w));
      if (!compatible) break;
      l.waiters.pop_front();
      l.shared.erase(w);
      t.shared.erase(id);
      l.exclusive = w;
      t.exclusive.insert(id);
      ++t.pending_index;
      t.waiting = false;
      t.waiting_on = kNoINode;
      sim_.cancel(t.wait_timer);
      sim_.schedule(0, sim::EventKind::kInternal, [this, w] {
        auto again = txns_.find(w);
        if (again == txns_.end() || again->second.waiting || !again->second.pending_done) return;
        continue_exclusive(again->second);
      });
      break;
    }
    if (l.exclusive != 0) break;
    l.waiters.pop_front();
    t.waiting = false;
    t.waiting_on = kNoINode;
    sim_.cancel(t.wait_timer);
    sim_.schedule(0, sim::EventKind::kInternal, [this, w] {
      auto again = txns_.find(w);
      if (again == txns_.end() || again->second.waiting || !again->second.pending_done) return;
      try_shared(again->second);
    });
  }
  if (l.exclusive == 0 && l.shared.empty() && l.waiters.empty()) locks_.erase(it);
}

void MetadataStore::put(TxnId txn, INodeRecord record) {
  Txn& t = txn_ref(txn);
  t.writes.push_back(StoreWrite{StoreWrite::Kind::kPut, std::move(record)});
}

void MetadataStore::erase(TxnId txn, INodeId id) {
  Txn& t = txn_ref(txn);
  const INodeRecord* rec = get(id);
  INodeRecord pre = rec != nullptr ? *rec : INodeRecord{};
  pre.id = id;
  t.writes.push_back(StoreWrite{StoreWrite::Kind::kErase, std::move(pre)});
}

void MetadataStore::record_result(TxnId txn, std::string request_id, OpResult result) {
  Txn& t = txn_ref(txn);
  t.request_id = std::move(request_id);
  t.result = std::move(result);
}

void MetadataStore::clear_subtree_on_commit(TxnId txn, std::string op_id) {
  txn_ref(txn).clear_subtrees.push_back(std::move(op_id));
}

void MetadataStore::set_tag(TxnId txn, std::string tag) { txn_ref(txn).tag = std::move(tag); }

std::size_t MetadataStore::pending_writes(TxnId txn) const {
  const Txn* t = find_txn(txn);
  return t == nullptr ? 0 : t->writes.size();
}

void MetadataStore::link_child(const INodeRecord& rec) {
  auto& siblings = children_[rec.parent];
  if (!siblings.emplace(rec.name, rec.id).second) {
    throw std::logic_error("store: duplicate name " + rec.name);
  }
}

void MetadataStore::unlink_child(const INodeRecord& rec) {
  auto it = children_.find(rec.parent);
  if (it != children_.end()) it->second.erase(rec.name);
}

void MetadataStore::apply(const StoreWrite& w) {
  if (w.kind == StoreWrite::Kind::kErase) {
    auto it = records_.find(w.record.id);
    if (it == records_.end()) throw std::logic_error("store: erase of missing inode");
    if (child_count(w.record.id) != 0) throw std::logic_error("store: erase of non-empty directory");
    unlink_child(it->second);
    children_.erase(w.record.id);
    records_.erase(it);
    return;
  }
  const INodeRecord& rec = w.record;
  const INodeRecord* parent = get(rec.parent);
  if (parent == nullptr || !parent->is_dir()) throw std::logic_error("store: put under missing directory");
  auto it = records_.find(rec.id);
  if (it == records_.end()) {
    INodeRecord fresh = rec;
    fresh.subtree_locked = false;
    fresh.subtree_op.clear();
    link_child(fresh);
    if (fresh.is_dir()) children_[fresh.id];
    records_.emplace(fresh.id, std::move(fresh));
    return;
  }
  INodeRecord& cur = it->second;
  if (cur.parent != rec.parent || cur.name != rec.name) {
    if (rec.is_dir() && is_ancestor_or_self(rec.id, rec.parent)) throw std::logic_error("store: cyclic move");
    unlink_child(cur);
    INodeRecord moved = cur;
    moved.parent = rec.parent;
    moved.name = rec.name;
    link_child(moved);
  }
  cur.parent = rec.parent;
  cur.name = rec.name;
  cur.perms = rec.perms;
  cur.mtime = rec.mtime;
}

void MetadataStore::commit(TxnId txn) {
  Txn& t = txn_ref(txn);
  if (t.waiting) throw std::logic_error("commit: acquisition pending");
  for (const auto& w : t.writes) apply(w);
  stats_.writes += t.writes.size();
  ++stats_.commits;
  if (t.result) retry_table_[t.request_id] = *t.result;
  if (on_commit) on_commit(CommitEvent{t.id, t.owner, sim_.now(), t.request_id, t.tag, &t.writes});
  std::vector<std::string> clears = std::move(t.clear_subtrees);
  for (const auto& op : clears) clear_subtree_lock(op);
  finish(t, TxnState::kCommitted);
}

void MetadataStore::abort(TxnId txn) {
  auto it = txns_.find(txn);
  if (it == txns_.end()) return;
  finish(it->second, TxnState::kAborted);
}

void MetadataStore::close(TxnId txn) {
  auto it = txns_.find(txn);
  if (it == txns_.end()) return;
  if (!it->second.writes.empty()) throw std::logic_error("close: txn has pending writes");
  finish(it->second, TxnState::kCommitted);
}

void MetadataStore::finish(Txn& t, TxnState state) {
  if (state == TxnState::kAborted) ++stats_.aborts;
  t.state = state;
  Done orphaned = std::move(t.pending_done);
  t.pending_done = nullptr;
  release_all(t);
  txns_.erase(t.id);
  if (orphaned) {
    sim_.schedule(0, sim::EventKind::kInternal, [orphaned = std::move(orphaned)] { orphaned(StoreError::kTxnAborted); });
  }
}

const OpResult* MetadataStore::committed_result(std::string_view request_id) const {
  auto it = retry_table_.find(std::string(request_id));
  return it == retry_table_.end() ? nullptr : &it->second;
}

// ---- subtree operations ----------------------------------------------------

StoreError MetadataStore::set_subtree_lock(TxnId txn, SubtreeOpEntry entry) {
  Txn& t = txn_ref(txn);
  if (t.exclusive.count(entry.root) == 0) throw std::logic_error("set_subtree_lock: root not exclusively locked");
  auto own = subtree_ops_.find(entry.op_id);
  if (own != subtree_ops_.end()) {
    if (!own->second.orphaned) return StoreError::kInProgress;
    own->second.owner = entry.owner;
    own->second.orphaned = false;
    if (on_subtree_event) on_subtree_event("adopt", own->second, path_of(own->second.root));
    return StoreError::kNone;
  }
  for (const auto& [op, e] : subtree_ops_) {
    if (is_ancestor_or_self(e.root, entry.root) || is_ancestor_or_self(entry.root, e.root)) {
      ++stats_.subtree_conflicts;
      return StoreError::kSubtreeConflict;
    }
  }
  INodeRecord& rec = records_.at(entry.root);
  rec.subtree_locked = true;
  rec.subtree_op = entry.op_id;
  entry.started_at = sim_.now();
  auto [it, inserted] = subtree_ops_.emplace(entry.op_id, entry);
  if (on_subtree_event) on_subtree_event("set", it->second, path_of(entry.root));
  return StoreError::kNone;
}

void MetadataStore::clear_subtree_lock(std::string_view op_id) {
  auto it = subtree_ops_.find(op_id);
  if (it == subtree_ops_.end()) return;
  SubtreeOpEntry entry = it->second;
  subtree_ops_.erase(it);
  auto rec = records_.find(entry.root);
  std::string root_path;
  if (rec != records_.end()) {
    root_path = path_of(entry.root);
    if (rec->second.subtree_op == entry.op_id) {
      rec->second.subtree_locked = false;
      rec->second.subtree_op.clear();
    }
  }
  if (on_subtree_event) on_subtree_event("clear", entry, root_path);
  notify_subtree_cleared(entry.op_id);
}

std::optional<std::string> MetadataStore::blocking_subtree_op(const Resolution& res, std::string_view own_op) const {
  for (const auto& rec : res.records) {
    auto it = records_.find(rec.id);
    if (it == records_.end()) continue;
    if (it->second.subtree_locked && it->second.subtree_op != own_op) return it->second.subtree_op;
  }
  return std::nullopt;
}

void MetadataStore::wait_subtree_clear(std::string op_id, OwnerId owner, std::function<void(bool)> cb) {
  if (subtree_ops_.find(op_id) == subtree_ops_.end()) {
    sim_.schedule(0, sim::EventKind::kInternal, [cb = std::move(cb)] { cb(true); });
    return;
  }
  std::uint64_t token = next_waiter_token_++;
  SubtreeWaiter w{owner, std::move(cb), {}, token};
  w.timer = sim_.schedule(cfg_.lock_wait_timeout, sim::EventKind::kTimeout, [this, op_id, token] {
    auto it = subtree_waiters_.find(op_id);
    if (it == subtree_waiters_.end()) return;
    auto& list = it->second;
    for (auto wi = list.begin(); wi != list.end(); ++wi) {
      if (wi->token != token) continue;
      auto cb = std::move(wi->cb);
      list.erase(wi);
      if (list.empty()) subtree_waiters_.erase(it);
      cb(false);
      return;
    }
  });
  subtree_waiters_[op_id].push_back(std::move(w));
}

void MetadataStore::notify_subtree_cleared(const std::string& op_id) {
  auto it = subtree_waiters_.find(op_id);
  if (it == subtree_waiters_.end()) return;
  std::vector<SubtreeWaiter> list = std::move(it->second);
  subtree_waiters_.erase(it);
  for (auto& w : list) {
    sim_.cancel(w.timer);
    sim_.schedule(0, sim::EventKind::kInternal, [cb = std::move(w.cb)] { cb(true); });
  }
}

std::vector<SubtreeOpEntry> MetadataStore::live_subtree_ops() const {
  std::vector<SubtreeOpEntry> out;
  for (const auto& [op, e] : subtree_ops_) out.push_back(e);
  return out;
}

bool MetadataStore::has_subtree_op(std::string_view op_id) const { return subtree_ops_.find(op_id) != subtree_ops_.end(); }

SubtreeDescription MetadataStore::describe_subtree(INodeId root) const {
  SubtreeDescription d;
  const INodeRecord* r = get(root);
  if (r == nullptr) return d;
  d.nodes.push_back(SubtreeNode{r->id, r->parent, path_of(root), r->kind, 0});
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    const SubtreeNode cur = d.nodes[i];
    if (cur.kind != NodeKind::kDirectory) continue;
    auto it = children_.find(cur.id);
    if (it == children_.end()) continue;
    for (const auto& [name, id] : it->second) {
      const INodeRecord& c = records_.at(id);
      d.nodes.push_back(SubtreeNode{id, cur.id, path::join(cur.path, name), c.kind, cur.depth + 1});
    }
  }
  return d;
}

void MetadataStore::quiesce_subtree(TxnId txn, INodeId root, std::function<void(StoreError, SubtreeDescription)> done) {
  SubtreeDescription before = describe_subtree(root);
  std::vector<INodeId> ids;
  ids.reserve(before.nodes.size());
  for (const auto& n : before.nodes) ids.push_back(n.id);
  lock_exclusive(txn, std::move(ids), [this, txn, root, done = std::move(done)](StoreError err) {
    if (err != StoreError::kNone) {
      done(err, {});
      return;
    }
    SubtreeDescription d = describe_subtree(root);
    release_locks(txn);
    done(StoreError::kNone, std::move(d));
  });
}

// ---- failure handling ------------------------------------------------------

void MetadataStore::orphan_subtree_op(std::string_view op_id) {
  auto it = subtree_ops_.find(op_id);
  if (it == subtree_ops_.end() || it->second.orphaned) return;
  orphan_entry(it->first, it->second);
}

void MetadataStore::orphan_entry(const std::string& op_id, SubtreeOpEntry& e) {
  e.orphaned = true;
  e.orphaned_at = sim_.now();
  if (on_subtree_event) on_subtree_event("orphan", e, path_of(e.root));
  sim::Time stamp = e.orphaned_at;
  sim_.schedule(cfg_.orphan_reclaim_after, sim::EventKind::kInternal, [this, op_id, stamp] {
    auto it = subtree_ops_.find(op_id);
    if (it == subtree_ops_.end() || !it->second.orphaned || it->second.orphaned_at != stamp) return;
    clear_subtree_lock(op_id);
  });
}

void MetadataStore::abort_owner(OwnerId owner) {
  std::vector<TxnId> victims;
  for (const auto& [id, t] : txns_) {
    if (t.owner == owner) victims.push_back(id);
  }
  std::sort(victims.begin(), victims.end());
  for (TxnId id : victims) abort(id);

  for (auto it = subtree_waiters_.begin(); it != subtree_waiters_.end();) {
    auto& list = it->second;
    for (auto wi = list.begin(); wi != list.end();) {
      if (wi->owner == owner) {
        sim_.cancel(wi->timer);
        wi = list.erase(wi);
      } else {
        ++wi;
      }
    }
    it = list.empty() ? subtree_waiters_.erase(it) : std::next(it);
  }

  for (auto& [op, e] : subtree_ops_) {
    if (e.owner == owner && !e.orphaned) orphan_entry(op, e);
  }
}

}  // namespace lfs::store
