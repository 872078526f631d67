#include "lambdafs/verify.hpp"

#include <algorithm>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "lambdafs/path.hpp"

namespace lfs::verify {

using nlohmann::json;
using nlohmann::ordered_json;

// ---- serialization ---------------------------------------------------------

std::string to_json_line(const HistoryOp& h) {
  ordered_json j;
  j["request_id"] = h.request_id;
  j["client"] = h.client;
  j["op"] = to_string(h.op.kind);
  j["path"] = h.op.path;
  if (h.op.kind == OpKind::kMv) j["dst"] = h.op.dst;
  j["invoke"] = h.invoke;
  j["response"] = h.response;
  j["status"] = to_string(h.result.status);
  j["id"] = h.result.id;
  j["mtime"] = h.result.mtime;
  j["kind"] = h.result.kind == NodeKind::kDirectory ? "directory" : "file";
  j["children"] = h.result.children;
  return j.dump();
}

HistoryOp history_from_json_line(const std::string& line) {
  json j = json::parse(line);
  HistoryOp h;
  h.request_id = j.at("request_id").get<std::string>();
  h.client = j.at("client").get<std::uint64_t>();
  h.op.kind = op_kind_from_string(j.at("op").get<std::string>());
  h.op.path = j.at("path").get<std::string>();
  h.op.dst = j.value("dst", std::string());
  h.invoke = j.at("invoke").get<sim::Time>();
  h.response = j.at("response").get<sim::Time>();
  h.result.status = fs_status_from_string(j.at("status").get<std::string>());
  h.result.id = j.at("id").get<std::uint64_t>();
  h.result.mtime = j.at("mtime").get<sim::Time>();
  h.result.kind = j.at("kind").get<std::string>() == "directory" ? NodeKind::kDirectory : NodeKind::kFile;
  h.result.children = j.at("children").get<std::uint32_t>();
  return h;
}

void write_history(std::ostream& os, const std::vector<HistoryOp>& history) {
  for (const auto& h : history) os << to_json_line(h) << '\n';
}

std::vector<HistoryOp> read_history(std::istream& is) {
  std::vector<HistoryOp> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) out.push_back(history_from_json_line(line));
  }
  return out;
}

std::vector<store::INodeRecord> read_snapshot(std::istream& is) {
  std::vector<store::INodeRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    store::INodeRecord r;
    r.id = INodeId{j.at("id").get<std::uint64_t>()};
    r.parent = INodeId{j.at("parent").get<std::uint64_t>()};
    r.name = j.at("name").get<std::string>();
    r.kind = j.at("kind").get<std::string>() == "directory" ? NodeKind::kDirectory : NodeKind::kFile;
    r.perms = j.at("perms").get<std::uint16_t>();
    r.mtime = j.at("mtime").get<sim::Time>();
    r.subtree_locked = j.value("subtree_lock", false);
    r.subtree_op = j.value("subtree_op", std::string());
    out.push_back(std::move(r));
  }
  return out;
}

std::string Report::to_json() const {
  ordered_json j;
  j["ok"] = ok();
  j["history_ops"] = history_ops;
  j["incomplete_ops"] = incomplete_ops;
  j["commits"] = commits;
  j["paths_checked"] = paths_checked;
  j["segments"] = segments;
  j["inconclusive_segments"] = inconclusive_segments;
  j["reads_checked"] = reads_checked;
  j["stale_reads"] = stale_reads;
  j["linearizability_violations"] = linearizability_violations;
  j["subtree_isolation_violations"] = subtree_isolation_violations;
  j["duplicate_commits"] = duplicate_commits;
  j["barrier_violations"] = barrier_violations;
  j["replay_errors"] = replay_errors;
  j["tree_matches"] = tree_matches;
  j["first_divergence"] = first_divergence;
  ordered_json v = ordered_json::array();
  for (const auto& x : violations) v.push_back({{"check", x.check}, {"detail", x.detail}});
  j["violations"] = std::move(v);
  return j.dump(2);
}

namespace {

constexpr sim::Time kForever = std::numeric_limits<sim::Time>::max();

struct Val {
  std::uint64_t id = 0;
  sim::Time mtime = 0;
  friend bool operator==(const Val&, const Val&) = default;
  friend auto operator<=>(const Val&, const Val&) = default;
};

std::string show(const Val& v) {
  if (v.id == 0) return "absent";
  return "id=" + std::to_string(v.id) + ",mtime=" + std::to_string(v.mtime);
}

struct RefNode {
  std::uint64_t parent = 0;
  std::string name;
  NodeKind kind = NodeKind::kFile;
  std::uint16_t perms = 0;
  sim::Time mtime = 0;
};

/// Independent replica of the namespace rebuilt from commit write lists.
class RefTree {
 public:
  void load(const std::vector<store::INodeRecord>& records) {
    for (const auto& r : records) {
      nodes_[to_u64(r.id)] = RefNode{to_u64(r.parent), r.name, r.kind, r.perms, r.mtime};
    }
    for (const auto& [id, n] : nodes_) {
      if (id != to_u64(kRootId)) kids_[n.parent][n.name] = id;
    }
  }

  std::string path_of(std::uint64_t id) const {
    std::vector<const std::string*> parts;
    std::uint64_t cur = id;
    for (std::size_t guard = 0; cur != to_u64(kRootId); ++guard) {
      auto it = nodes_.find(cur);
      if (it == nodes_.end() || guard > nodes_.size()) return "?";
      parts.push_back(&it->second.name);
      cur = it->second.parent;
    }
    if (parts.empty()) return "/";
    std::string out;
    for (auto p = parts.rbegin(); p != parts.rend(); ++p) {
      out += '/';
      out += **p;
    }
    return out;
  }

  void subtree(std::uint64_t id, std::vector<std::uint64_t>& out) const {
    out.push_back(id);
    auto it = kids_.find(id);
    if (it == kids_.end()) return;
    for (const auto& [name, c] : it->second) subtree(c, out);
  }

  /// Applies one commit and returns the path-level changes it caused.
  std::map<std::string, Val> apply(const std::vector<trace::TraceWrite>& writes, std::vector<std::string>& errors) {
    std::set<std::uint64_t> affected;
    for (const auto& w : writes) {
      auto it = nodes_.find(w.id);
      if (w.erase || it == nodes_.end()) {
        affected.insert(w.id);
        continue;
      }
      if (it->second.parent != w.parent || it->second.name != w.name) {
        std::vector<std::uint64_t> sub;
        subtree(w.id, sub);
        affected.insert(sub.begin(), sub.end());
      } else {
        affected.insert(w.id);
      }
    }
    std::map<std::string, Val> before;
    for (auto id : affected) {
      auto it = nodes_.find(id);
      if (it != nodes_.end()) before[path_of(id)] = Val{id, it->second.mtime};
    }
    for (const auto& w : writes) apply_one(w, errors);
    std::map<std::string, Val> after;
    for (auto id : affected) {
      auto it = nodes_.find(id);
      if (it != nodes_.end()) after[path_of(id)] = Val{id, it->second.mtime};
    }
    std::map<std::string, Val> eff;
    for (const auto& [p, v] : before) eff[p] = Val{};
    for (const auto& [p, v] : after) eff[p] = v;
    for (auto it = eff.begin(); it != eff.end();) {
      auto b = before.find(it->first);
      if (b != before.end() && b->second == it->second) {
        it = eff.erase(it);
      } else {
        ++it;
      }
    }
    return eff;
  }

  std::map<std::string, std::string> describe() const {
    std::map<std::string, std::string> out;
    for (const auto& [id, n] : nodes_) {
      out[path_of(id)] = std::to_string(id) + "|" + std::to_string(n.parent) + "|" +
                         (n.kind == NodeKind::kDirectory ? "d" : "f") + "|" + std::to_string(n.perms) + "|" +
                         std::to_string(n.mtime);
    }
    return out;
  }

  std::map<std::string, Val> path_values() const {
    std::map<std::string, Val> out;
    for (const auto& [id, n] : nodes_) out[path_of(id)] = Val{id, n.mtime};
    return out;
  }

 private:
  void apply_one(const trace::TraceWrite& w, std::vector<std::string>& errors) {
    if (w.erase) {
      auto it = nodes_.find(w.id);
      if (it == nodes_.end()) {
        errors.push_back("erase of missing inode " + std::to_string(w.id));
        return;
      }
      auto k = kids_.find(w.id);
      if (k != kids_.end() && !k->second.empty()) {
        errors.push_back("erase of non-empty directory " + path_of(w.id));
        return;
      }
      kids_[it->second.parent].erase(it->second.name);
      kids_.erase(w.id);
      nodes_.erase(it);
      return;
    }
    auto parent = nodes_.find(w.parent);
    if (parent == nodes_.end() || parent->second.kind != NodeKind::kDirectory) {
      errors.push_back("put of " + w.name + " under missing directory " + std::to_string(w.parent));
      return;
    }
    auto& siblings = kids_[w.parent];
    auto it = nodes_.find(w.id);
    if (it == nodes_.end()) {
      if (siblings.count(w.name) != 0) {
        errors.push_back("duplicate name " + w.name + " in " + path_of(w.parent));
        return;
      }
      nodes_[w.id] = RefNode{w.parent, w.name, w.kind, w.perms, w.mtime};
      siblings[w.name] = w.id;
      return;
    }
    RefNode& n = it->second;
    if (n.parent != w.parent || n.name != w.name) {
      auto clash = siblings.find(w.name);
      if (clash != siblings.end() && clash->second != w.id) {
        errors.push_back("move onto existing name " + w.name);
        return;
      }
      kids_[n.parent].erase(n.name);
      kids_[w.parent][w.name] = w.id;
    }
    n.parent = w.parent;
    n.name = w.name;
    n.kind = w.kind;
    n.perms = w.perms;
    n.mtime = w.mtime;
  }

  std::map<std::uint64_t, RefNode> nodes_;
  std::map<std::uint64_t, std::map<std::string, std::uint64_t>> kids_;
};

enum class KeyType : std::uint8_t { kWrite, kEq, kPresent, kAbsent };

struct KeyOp {
  sim::Time inv = 0;
  sim::Time resp = 0;
  KeyType type = KeyType::kWrite;
  Val v;
  bool read = false;
  std::size_t source = 0;  // history index, or SIZE_MAX for system writes
};

bool matches(const KeyOp& op, const Val& cur) {
  switch (op.type) {
    case KeyType::kEq:
      return op.v == cur;
    case KeyType::kPresent:
      return cur.id != 0;
    case KeyType::kAbsent:
      return cur.id == 0;
    case KeyType::kWrite:
      return true;
  }
  return false;
}

/// Wing-Gong search over one segment; returns every reachable final value.
/// Sets `inconclusive` when the state budget is exhausted.
std::set<Val> search_segment(const std::vector<KeyOp>& ops, const std::set<Val>& start, std::uint64_t budget,
                             bool& inconclusive) {
  const std::size_t n = ops.size();
  std::vector<Val> vals(start.begin(), start.end());
  for (const auto& o : ops) {
    if (o.type == KeyType::kWrite && std::find(vals.begin(), vals.end(), o.v) == vals.end()) vals.push_back(o.v);
  }
  auto index_of = [&](const Val& v) {
    return static_cast<std::uint32_t>(std::find(vals.begin(), vals.end(), v) - vals.begin());
  };
  const std::uint64_t full = n == 64 ? ~0ULL : ((1ULL << n) - 1);
  struct KeyHash {
    std::size_t operator()(const std::pair<std::uint64_t, std::uint32_t>& k) const {
      return std::hash<std::uint64_t>()(k.first * 0x9e3779b97f4a7c15ULL ^ k.second);
    }
  };
  std::unordered_set<std::pair<std::uint64_t, std::uint32_t>, KeyHash> seen;
  std::set<Val> ends;
  std::uint64_t states = 0;
  std::function<void(std::uint64_t, std::uint32_t)> dfs = [&](std::uint64_t mask, std::uint32_t vi) {
    if (inconclusive) return;
    if (!seen.emplace(mask, vi).second) return;
    if (++states > budget) {
      inconclusive = true;
      return;
    }
    if (mask == full) {
      ends.insert(vals[vi]);
      return;
    }
    sim::Time min_resp = kForever;
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask & (1ULL << i)) == 0) min_resp = std::min(min_resp, ops[i].resp);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask & (1ULL << i)) != 0 || ops[i].inv > min_resp) continue;
      const KeyOp& o = ops[i];
      if (o.type == KeyType::kWrite) {
        dfs(mask | (1ULL << i), index_of(o.v));
      } else if (matches(o, vals[vi])) {
        dfs(mask | (1ULL << i), vi);
      }
    }
  };
  for (const auto& v : start) dfs(0, index_of(v));
  return ends;
}

struct Window {
  std::string op_id;
  std::string root;
  sim::Time start = 0;
  sim::Time end = kForever;
  sim::Time first_commit = kForever;
};

}  // namespace

Report verify_run(const std::vector<store::INodeRecord>& initial, const std::vector<store::INodeRecord>& final_state,
                  const std::vector<trace::TraceEvent>& trace, const std::vector<HistoryOp>& history,
                  const Options& opts) {
  Report rep;
  rep.history_ops = history.size();
  auto report = [&](const std::string& check, const std::string& detail) {
    if (rep.violations.size() < opts.max_reported) rep.violations.push_back({check, detail});
  };

  std::unordered_map<std::string, std::size_t> by_request;
  for (std::size_t i = 0; i < history.size(); ++i) {
    by_request.emplace(history[i].request_id, i);
    if (!history[i].known()) ++rep.incomplete_ops;
  }

  // Reference tree replay plus per-operation write effects.
  RefTree ref;
  ref.load(initial);
  const std::map<std::string, Val> initial_values = ref.path_values();
  struct OpWrites {
    std::map<std::string, Val> last;
    sim::Time first = kForever;
    sim::Time last_t = 0;
  };
  std::map<std::string, OpWrites> op_writes;
  std::map<std::string, std::vector<KeyOp>> keys;
  std::map<std::string, std::size_t> final_commits;
  std::map<std::uint64_t, std::string> round_request;
  std::map<std::string, sim::Time> first_ok_round;
  std::vector<Window> windows;
  std::map<std::string, std::size_t> open_window;

  for (const auto& e : trace) {
    switch (e.type) {
      case trace::EventType::kRoundOpen:
        round_request[e.round] = e.request_id;
        break;
      case trace::EventType::kRoundDone: {
        if (!e.ok) break;
        auto it = round_request.find(e.round);
        if (it == round_request.end()) break;
        first_ok_round.emplace(it->second, e.t);
        break;
      }
      case trace::EventType::kCommit: {
        ++rep.commits;
        std::vector<std::string> errors;
        auto eff = ref.apply(e.writes, errors);
        for (const auto& err : errors) {
          ++rep.replay_errors;
          report("replay", "txn " + std::to_string(e.txn) + ": " + err);
        }
        const std::string& key = !e.request_id.empty() ? e.request_id : e.op_id;
        if (!e.request_id.empty() && ++final_commits[e.request_id] == 2) {
          ++rep.duplicate_commits;
          report("exactly_once", "request " + e.request_id + " committed more than once");
        }
        if (!key.empty() && !e.writes.empty()) {
          auto r = first_ok_round.find(key);
          if (r == first_ok_round.end() || r->second > e.t) {
            ++rep.barrier_violations;
            report("commit_barrier", "request " + key + " committed at " + std::to_string(e.t) +
                                         " before its invalidation round completed");
          }
        }
        if (!key.empty()) {
          auto oi = open_window.find(key);
          if (oi != open_window.end()) windows[oi->second].first_commit = std::min(windows[oi->second].first_commit, e.t);
        }
        if (eff.empty()) break;
        if (key.empty() || by_request.count(key) == 0) {
          for (const auto& [p, v] : eff) keys[p].push_back(KeyOp{e.t, e.t, KeyType::kWrite, v, false, SIZE_MAX});
          break;
        }
        OpWrites& ow = op_writes[key];
        for (const auto& [p, v] : eff) ow.last[p] = v;
        ow.first = std::min(ow.first, e.t);
        ow.last_t = std::max(ow.last_t, e.t);
        break;
      }
      case trace::EventType::kSubtree: {
        const std::string root = e.paths.empty() ? std::string() : e.paths.front();
        if (e.subtree_event == "set") {
          open_window[e.op_id] = windows.size();
          windows.push_back(Window{e.op_id, root, e.t, kForever, kForever});
        } else if (e.subtree_event == "clear") {
          auto it = open_window.find(e.op_id);
          if (it != open_window.end()) {
            windows[it->second].end = e.t;
            open_window.erase(it);
          }
        }
        break;
      }
      default:
        break;
    }
  }

  // Final snapshot comparison.
  {
    RefTree fin;
    fin.load(final_state);
    auto want = ref.describe();
    auto got = fin.describe();
    auto a = want.begin();
    auto b = got.begin();
    while (a != want.end() || b != got.end()) {
      if (a != want.end() && b != got.end() && a->first == b->first) {
        if (a->second != b->second) {
          rep.tree_matches = false;
          rep.first_divergence = a->first;
          break;
        }
        ++a;
        ++b;
        continue;
      }
      rep.tree_matches = false;
      if (b == got.end() || (a != want.end() && a->first < b->first)) {
        rep.first_divergence = a->first;
      } else {
        rep.first_divergence = b->first;
      }
      break;
    }
    if (!rep.tree_matches) report("reference_tree", "first divergent path " + rep.first_divergence);
  }

  // Per-path operations from the history.
  for (std::size_t i = 0; i < history.size(); ++i) {
    const HistoryOp& h = history[i];
    auto ow = op_writes.find(h.request_id);
    if (ow != op_writes.end()) {
      sim::Time inv = h.known() ? std::min(h.invoke, ow->second.first) : ow->second.first;
      sim::Time resp = h.known() ? std::max(h.response, ow->second.last_t) : ow->second.last_t;
      for (const auto& [p, v] : ow->second.last) keys[p].push_back(KeyOp{inv, resp, KeyType::kWrite, v, false, i});
    }
    if (!h.known()) continue;
    const FsStatus s = h.result.status;
    auto observe = [&](const std::string& p, KeyType t, Val v, bool read) {
      keys[p].push_back(KeyOp{h.invoke, h.response, t, v, read, i});
    };
    switch (h.op.kind) {
      case OpKind::kRead:
      case OpKind::kStat:
      case OpKind::kLs:
        if (s == FsStatus::kOk) {
          observe(h.op.path, KeyType::kEq, Val{h.result.id, h.result.mtime}, true);
        } else if (s == FsStatus::kNotFound || s == FsStatus::kNotDirectory) {
          observe(h.op.path, KeyType::kAbsent, Val{}, true);
        }
        break;
      case OpKind::kCreate:
      case OpKind::kMkdir:
        if (s == FsStatus::kAlreadyExists) observe(h.op.path, KeyType::kPresent, Val{}, false);
        if (s == FsStatus::kNotFound) observe(std::string(path::parent(h.op.path)), KeyType::kAbsent, Val{}, false);
        break;
      case OpKind::kDelete:
      case OpKind::kSetattr:
        if (s == FsStatus::kNotFound) observe(h.op.path, KeyType::kAbsent, Val{}, false);
        break;
      case OpKind::kMv:
        break;
    }
    if (s == FsStatus::kOk && !is_read_op(h.op.kind) && ow == op_writes.end()) {
      ++rep.linearizability_violations;
      report("linearizability", "request " + h.request_id + " acknowledged without a committed effect");
    }
  }

  // Linearizability and stale reads, one register per path.
  for (auto& [p, ops] : keys) {
    ++rep.paths_checked;
    std::sort(ops.begin(), ops.end(), [](const KeyOp& a, const KeyOp& b) {
      if (a.inv != b.inv) return a.inv < b.inv;
      return a.resp < b.resp;
    });
    auto iv = initial_values.find(p);
    const Val init = iv == initial_values.end() ? Val{} : iv->second;

    std::vector<const KeyOp*> writes;
    for (const auto& o : ops) {
      if (o.type == KeyType::kWrite) writes.push_back(&o);
    }
    for (const auto& r : ops) {
      if (!r.read) continue;
      ++rep.reads_checked;
      bool allowed = false;
      bool any_completed = false;
      for (const KeyOp* w : writes) {
        bool completed = w->resp < r.inv;
        bool concurrent = !completed && w->inv <= r.resp;
        if (completed) {
          any_completed = true;
          bool superseded = false;
          for (const KeyOp* w2 : writes) {
            if (w2 != w && w2->resp < r.inv && w2->inv > w->resp) {
              superseded = true;
              break;
            }
          }
          if (!superseded && matches(r, w->v)) allowed = true;
        } else if (concurrent && matches(r, w->v)) {
          allowed = true;
        }
        if (allowed) break;
      }
      if (!allowed && !any_completed && matches(r, init)) allowed = true;
      if (!allowed) {
        ++rep.stale_reads;
        const HistoryOp& h = history[r.source];
        report("stale_read", "request " + h.request_id + " read " + p + " = " + show(r.v) + " at [" +
                                 std::to_string(r.inv) + ", " + std::to_string(r.resp) + "]");
      }
    }

    if (!opts.linearizability) continue;
    std::set<Val> state = {init};
    std::size_t begin = 0;
    while (begin < ops.size()) {
      std::size_t end = begin + 1;
      sim::Time horizon = ops[begin].resp;
      while (end < ops.size() && ops[end].inv <= horizon) {
        horizon = std::max(horizon, ops[end].resp);
        ++end;
      }
      ++rep.segments;
      std::vector<KeyOp> seg(ops.begin() + static_cast<std::ptrdiff_t>(begin), ops.begin() + static_cast<std::ptrdiff_t>(end));
      bool inconclusive = seg.size() > opts.max_segment_ops;
      std::set<Val> next;
      if (!inconclusive) next = search_segment(seg, state, opts.max_search_states, inconclusive);
      if (inconclusive) {
        ++rep.inconclusive_segments;
        next = state;
        for (const auto& o : seg) {
          if (o.type == KeyType::kWrite) next.insert(o.v);
        }
      } else if (next.empty()) {
        ++rep.linearizability_violations;
        report("linearizability", "path " + p + ": no linearization for " + std::to_string(seg.size()) +
                                      " operations in [" + std::to_string(seg.front().inv) + ", " +
                                      std::to_string(horizon) + "]");
        next = state;
        for (const auto& o : seg) {
          if (o.type == KeyType::kWrite) next.insert(o.v);
        }
      }
      state = std::move(next);
      begin = end;
    }
  }

  // Subtree isolation: overlapping lock windows and reads served inside them.
  for (std::size_t i = 0; i < windows.size(); ++i) {
    for (std::size_t j = i + 1; j < windows.size(); ++j) {
      const Window& a = windows[i];
      const Window& b = windows[j];
      if (a.start >= b.end || b.start >= a.end) continue;
      if (path::has_prefix(a.root, b.root) || path::has_prefix(b.root, a.root)) {
        ++rep.subtree_isolation_violations;
        report("subtree_isolation", "ops " + a.op_id + " and " + b.op_id + " held overlapping subtrees " + a.root +
                                        " and " + b.root);
      }
    }
  }
  std::vector<std::size_t> reads;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i].known() && is_read_op(history[i].op.kind)) reads.push_back(i);
  }
  std::sort(reads.begin(), reads.end(), [&](std::size_t a, std::size_t b) {
    if (history[a].invoke != history[b].invoke) return history[a].invoke < history[b].invoke;
    return a < b;
  });
  for (const Window& w : windows) {
    if (w.first_commit == kForever || w.root.empty()) continue;
    auto lo = std::upper_bound(reads.begin(), reads.end(), w.first_commit,
                               [&](sim::Time t, std::size_t idx) { return t < history[idx].invoke; });
    for (auto it = lo; it != reads.end() && history[*it].invoke < w.end; ++it) {
      const HistoryOp& h = history[*it];
      if (h.response >= w.end || !path::has_prefix(h.op.path, w.root)) continue;
      ++rep.subtree_isolation_violations;
      report("subtree_isolation", "request " + h.request_id + " read " + h.op.path + " inside subtree op " + w.op_id);
    }
  }
  return rep;
}

}  // namespace lfs::verify
