#include "lambdafs/cache_trie.hpp"

#include <algorithm>
#include <stdexcept>

#include "lambdafs/path.hpp"

namespace lfs::cache {

CacheTrie::CacheTrie(std::size_t capacity) : capacity_(capacity), root_(std::make_unique<Node>()) {}

CacheTrie::Node* CacheTrie::find(std::string_view p) const {
  Node* cur = root_.get();
  for (auto comp : path::components(p)) {
    auto it = cur->kids.find(comp);
    if (it == cur->kids.end()) return nullptr;
    cur = it->second.get();
  }
  return cur;
}

void CacheTrie::touch(Node* n) { lru_.splice(lru_.begin(), lru_, n->lru_pos); }

LookupResult CacheTrie::lookup(std::string_view p) {
  LookupResult out;
  Node* cur = root_.get();
  std::vector<Node*> chain;
  auto comps = path::components(p);
  if (cur->has_record) {
    chain.push_back(cur);
    for (auto comp : comps) {
      auto it = cur->kids.find(comp);
      if (it == cur->kids.end() || !it->second->has_record) break;
      cur = it->second.get();
      chain.push_back(cur);
    }
  }
  out.cached_depth = chain.size();
  out.hit = chain.size() == comps.size() + 1;
  for (Node* n : chain) touch(n);
  if (out.hit) {
    ++stats_.hits;
    out.records.reserve(chain.size());
    for (Node* n : chain) out.records.push_back(n->rec.record);
  } else {
    ++stats_.misses;
  }
  return out;
}

std::size_t CacheTrie::insert_path(const std::vector<INodeRecord>& records, sim::Time now) {
  if (records.empty()) return 0;
  if (records.front().id != kRootId) throw std::invalid_argument("insert_path: chain must start at the root");
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].parent != records[i - 1].id) throw std::invalid_argument("insert_path: broken parent chain");
  }
  std::size_t keep = std::min(records.size(), capacity_);
  Node* cur = root_.get();
  std::vector<Node*> inserted;
  for (std::size_t i = 0; i < keep; ++i) {
    if (i > 0) {
      const std::string& name = records[i].name;
      auto it = cur->kids.find(name);
      if (it == cur->kids.end()) {
        auto node = std::make_unique<Node>();
        node->name = name;
        node->parent = cur;
        it = cur->kids.emplace(name, std::move(node)).first;
      }
      cur = it->second.get();
    }
    if (cur->has_record && cur->rec.record.id != records[i].id) {
      by_id_.erase(cur->rec.record.id);
    }
    auto stale = by_id_.find(records[i].id);
    if (stale != by_id_.end() && stale->second != cur) {
      Node* old = stale->second;
      drop_record(old);
      prune(old);
    }
    cur->rec = CachedRecord{records[i], now};
    by_id_[records[i].id] = cur;
    if (!cur->has_record) {
      cur->has_record = true;
      lru_.push_front(cur);
      cur->lru_pos = lru_.begin();
    } else {
      touch(cur);
    }
    inserted.push_back(cur);
  }
  // Keep the new chain ordered root-first at the most-recent end.
  for (auto it = inserted.rbegin(); it != inserted.rend(); ++it) touch(*it);
  std::size_t evicted = 0;
  while (lru_.size() > capacity_) {
    Node* victim = lru_.back();
    drop_record(victim);
    prune(victim);
    ++evicted;
  }
  stats_.evictions += evicted;
  return evicted;
}

void CacheTrie::drop_record(Node* n) {
  if (!n->has_record) return;
  lru_.erase(n->lru_pos);
  auto it = by_id_.find(n->rec.record.id);
  if (it != by_id_.end() && it->second == n) by_id_.erase(it);
  n->has_record = false;
  n->rec = {};
}

void CacheTrie::prune(Node* n) {
  while (n != root_.get() && !n->has_record && n->kids.empty()) {
    Node* parent = n->parent;
    parent->kids.erase(n->name);
    n = parent;
  }
}

std::size_t CacheTrie::invalidate(std::string_view p) {
  Node* n = find(p);
  if (n == nullptr || !n->has_record) return 0;
  drop_record(n);
  prune(n);
  ++stats_.invalidated;
  return 1;
}

std::size_t CacheTrie::invalidate_id(INodeId id) {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return 0;
  Node* n = it->second;
  drop_record(n);
  prune(n);
  ++stats_.invalidated;
  return 1;
}

std::size_t CacheTrie::count_and_unindex(Node* n) {
  std::size_t removed = 0;
  if (n->has_record) {
    drop_record(n);
    ++removed;
  }
  for (auto& [name, kid] : n->kids) removed += count_and_unindex(kid.get());
  return removed;
}

std::size_t CacheTrie::invalidate_prefix(std::string_view prefix) {
  Node* n = find(prefix);
  if (n == nullptr) return 0;
  std::size_t removed = count_and_unindex(n);
  if (n == root_.get()) {
    root_->kids.clear();
  } else {
    Node* parent = n->parent;
    parent->kids.erase(n->name);
    prune(parent);
  }
  stats_.invalidated += removed;
  return removed;
}

void CacheTrie::clear() { invalidate_prefix("/"); }

std::string CacheTrie::path_of(const Node* n) const {
  std::vector<std::string_view> names;
  for (const Node* cur = n; cur != root_.get(); cur = cur->parent) names.push_back(cur->name);
  if (names.empty()) return "/";
  std::string out;
  for (auto it = names.rbegin(); it != names.rend(); ++it) {
    out += '/';
    out += *it;
  }
  return out;
}

void CacheTrie::collect(const Node* n, std::string& prefix, std::vector<std::string>& out) const {
  if (n->has_record) out.push_back(prefix.empty() ? "/" : prefix);
  for (const auto& [name, kid] : n->kids) {
    std::size_t len = prefix.size();
    prefix += '/';
    prefix += name;
    collect(kid.get(), prefix, out);
    prefix.resize(len);
  }
}

std::vector<std::string> CacheTrie::cached_paths() const {
  std::vector<std::string> out;
  std::string prefix;
  collect(root_.get(), prefix, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::string CacheTrie::dump() const {
  std::string out;
  for (const auto& p : cached_paths()) {
    out += p;
    out += '\n';
  }
  return out;
}

}  // namespace lfs::cache
