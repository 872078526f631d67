#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lambdafs/fs_types.hpp"
#include "lambdafs/sim_kernel.hpp"

namespace lfs::store {

using OwnerId = std::uint64_t;
using TxnId = std::uint64_t;
inline constexpr OwnerId kSystemOwner = 0;

struct INodeRecord {
  INodeId id = kNoINode;
  INodeId parent = kNoINode;
  std::string name;
  NodeKind kind = NodeKind::kFile;
  std::uint16_t perms = 0644;
  sim::Time mtime = 0;
  bool subtree_locked = false;
  std::string subtree_op;

  bool is_dir() const { return kind == NodeKind::kDirectory; }
};

enum class StoreError : std::uint8_t { kNone, kMalformedPath, kTxnAborted, kLockTimeout, kSubtreeConflict, kInProgress };
std::string_view to_string(StoreError e);

/// Result of a batch path resolution: records root->leaf, or the longest
/// resolvable prefix when `complete` is false (miss marker at `miss_depth`).
struct Resolution {
  std::vector<INodeRecord> records;
  bool complete = false;
  std::size_t miss_depth = 0;

  const INodeRecord& leaf() const { return records.back(); }
};

enum class SubtreeKind : std::uint8_t { kMv, kDelete };

struct SubtreeOpEntry {
  std::string op_id;
  INodeId root = kNoINode;
  SubtreeKind kind = SubtreeKind::kDelete;
  sim::Time started_at = 0;
  OwnerId owner = kSystemOwner;
  bool orphaned = false;
  sim::Time orphaned_at = 0;
};

struct SubtreeNode {
  INodeId id;
  INodeId parent;
  std::string path;
  NodeKind kind;
  std::size_t depth;  // relative to the subtree root
};

/// In-memory description of a quiesced subtree, root first (BFS order).
struct SubtreeDescription {
  std::vector<SubtreeNode> nodes;
};

struct StoreWrite {
  enum class Kind : std::uint8_t { kPut, kErase } kind;
  INodeRecord record;  // for kErase only id (and the pre-image) is meaningful
};

struct CommitEvent {
  TxnId txn;
  OwnerId owner;
  sim::Time at;
  std::string request_id;  // empty unless the txn recorded a client result
  std::string tag;         // operation a helper txn works for, if any
  const std::vector<StoreWrite>* writes;
};

struct StoreConfig {
  sim::Duration lock_wait_timeout = sim::sec(5);
  sim::Duration orphan_reclaim_after = sim::sec(10);
};

/// In-memory transactional INode table. Lock waits are simulated through the
/// event loop; every continuation is delivered as a scheduled event except an
/// immediate grant, which runs synchronously.
class MetadataStore {
 public:
  using Done = std::function<void(StoreError)>;

  explicit MetadataStore(sim::Simulator& sim, StoreConfig cfg = {});

  // ---- direct access -------------------------------------------------------
  const INodeRecord* get(INodeId id) const;
  std::optional<INodeId> child(INodeId dir, std::string_view name) const;
  std::vector<INodeId> children(INodeId dir) const;
  std::size_t child_count(INodeId dir) const;
  Resolution resolve_path_batch(std::string_view path) const;
  std::string path_of(INodeId id) const;
  bool is_ancestor_or_self(INodeId ancestor, INodeId node) const;
  std::size_t size() const { return records_.size(); }
  INodeId allocate_id() { return INodeId{next_id_++}; }

  /// Bulk creation outside any transaction (namespace seeding). Throws on
  /// invalid parent or duplicate name.
  INodeId create_direct(INodeId parent, std::string name, NodeKind kind, sim::Time mtime = 0);

  std::vector<INodeRecord> snapshot() const;
  std::string snapshot_jsonl() const;

  // ---- transactions --------------------------------------------------------
  TxnId begin(OwnerId owner);
  bool is_open(TxnId txn) const;
  OwnerId owner_of(TxnId txn) const;

  /// Acquires exclusive locks in ascending id order, waiting on holders.
  void lock_exclusive(TxnId txn, std::vector<INodeId> ids, Done done);
  /// Acquires shared locks on all ids at once or none; waits and retries on conflict.
  void lock_shared_all(TxnId txn, std::vector<INodeId> ids, Done done);
  bool holds_exclusive(TxnId txn, INodeId id) const;
  bool holds_shared(TxnId txn, INodeId id) const;
  /// Releases every lock while keeping the txn open (for revalidation retries).
  void release_locks(TxnId txn);

  void put(TxnId txn, INodeRecord record);
  void erase(TxnId txn, INodeId id);
  void record_result(TxnId txn, std::string request_id, OpResult result);
  void clear_subtree_on_commit(TxnId txn, std::string op_id);
  void set_tag(TxnId txn, std::string tag);
  std::size_t pending_writes(TxnId txn) const;

  void commit(TxnId txn);
  void abort(TxnId txn);
  /// Ends a txn without writes: releases locks, no commit hook, not counted as an abort.
  void close(TxnId txn);

  // ---- subtree operations --------------------------------------------------
  /// Requires `txn` to hold an exclusive lock on `root`. Returns kInProgress
  /// when a live entry with the same op id exists; an orphaned one is adopted.
  StoreError set_subtree_lock(TxnId txn, SubtreeOpEntry entry);
  void clear_subtree_lock(std::string_view op_id);
  /// Marks a live entry orphaned so a resubmission can adopt it; reclaimed later otherwise.
  void orphan_subtree_op(std::string_view op_id);
  /// First path component locked by a subtree op other than `own_op`, if any.
  std::optional<std::string> blocking_subtree_op(const Resolution& res, std::string_view own_op) const;
  /// Invokes `cb(true)` once `op_id` clears, or `cb(false)` after the lock-wait timeout.
  void wait_subtree_clear(std::string op_id, OwnerId owner, std::function<void(bool)> cb);
  std::vector<SubtreeOpEntry> live_subtree_ops() const;
  bool has_subtree_op(std::string_view op_id) const;

  /// Takes and releases exclusive locks on every subtree INode in ascending id order.
  void quiesce_subtree(TxnId txn, INodeId root, std::function<void(StoreError, SubtreeDescription)> done);
  SubtreeDescription describe_subtree(INodeId root) const;

  // ---- failure handling ----------------------------------------------------
  /// Aborts every open txn of `owner`, releases its locks and orphans its subtree entries.
  void abort_owner(OwnerId owner);
  const OpResult* committed_result(std::string_view request_id) const;

  struct Stats {
    std::uint64_t commits = 0;
    std::uint64_t aborts = 0;
    std::uint64_t writes = 0;
    std::uint64_t lock_waits = 0;
    std::uint64_t lock_timeouts = 0;
    std::uint64_t subtree_conflicts = 0;
  };
  const Stats& stats() const { return stats_; }

  std::function<void(const CommitEvent&)> on_commit;
  std::function<void(std::string_view event, const SubtreeOpEntry&, std::string_view root_path)> on_subtree_event;

 private:
  struct LockState {
    TxnId exclusive = 0;
    std::set<TxnId> shared;
    std::deque<TxnId> waiters;
  };
  enum class TxnState : std::uint8_t { kOpen, kCommitted, kAborted };
  struct Txn {
    TxnId id = 0;
    OwnerId owner = kSystemOwner;
    TxnState state = TxnState::kOpen;
    std::set<INodeId> exclusive;
    std::set<INodeId> shared;
    std::vector<StoreWrite> writes;
    std::string request_id;
    std::string tag;
    std::optional<OpResult> result;
    std::vector<std::string> clear_subtrees;
    // Pending lock acquisition.
    bool waiting = false;
    bool wait_shared = false;
    INodeId waiting_on = kNoINode;
    std::vector<INodeId> pending_ids;
    std::size_t pending_index = 0;
    Done pending_done;
    sim::EventHandle wait_timer;
  };
  struct SubtreeWaiter {
    OwnerId owner;
    std::function<void(bool)> cb;
    sim::EventHandle timer;
    std::uint64_t token;
  };

  Txn& txn_ref(TxnId txn);
  const Txn* find_txn(TxnId txn) const;
  void continue_exclusive(Txn& t);
  void try_shared(Txn& t);
  void enqueue_wait(Txn& t, INodeId id);
  void on_wait_timeout(TxnId txn);
  void release_all(Txn& t);
  void release_one(TxnId txn, INodeId id);
  void wake(INodeId id);
  void finish(Txn& t, TxnState state);
  void apply(const StoreWrite& w);
  void unlink_child(const INodeRecord& rec);
  void link_child(const INodeRecord& rec);
  void notify_subtree_cleared(const std::string& op_id);
  void orphan_entry(const std::string& op_id, SubtreeOpEntry& e);

  sim::Simulator& sim_;
  StoreConfig cfg_;
  std::unordered_map<INodeId, INodeRecord> records_;
  std::unordered_map<INodeId, std::map<std::string, INodeId, std::less<>>> children_;
  std::uint64_t next_id_ = 2;
  std::unordered_map<TxnId, Txn> txns_;
  TxnId next_txn_ = 1;
  std::unordered_map<INodeId, LockState> locks_;
  std::map<std::string, SubtreeOpEntry, std::less<>> subtree_ops_;
  std::map<std::string, std::vector<SubtreeWaiter>, std::less<>> subtree_waiters_;
  std::uint64_t next_waiter_token_ = 1;
  std::unordered_map<std::string, OpResult> retry_table_;
  Stats stats_;
};

}  // namespace lfs::store
