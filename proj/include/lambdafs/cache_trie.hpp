#pragma once

#include <cstddef>
#include <limits>
#include <list>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lambdafs/namespace_store.hpp"

namespace lfs::cache {

using store::INodeRecord;

struct CachedRecord {
  INodeRecord record;
  sim::Time cached_at = 0;
};

struct LookupResult {
  bool hit = false;
  // Number of consecutive cached records from the root (root included).
  std::size_t cached_depth = 0;
  // On a hit, every record from root to leaf.
  std::vector<INodeRecord> records;
};

/// Path-trie metadata cache with LRU eviction over record-bearing nodes.
class CacheTrie {
 public:
  static constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

  explicit CacheTrie(std::size_t capacity = kUnbounded);
  CacheTrie(const CacheTrie&) = delete;
  CacheTrie& operator=(const CacheTrie&) = delete;

  LookupResult lookup(std::string_view path);
  /// Caches a root->leaf record chain. Returns the number of evicted records.
  /// A chain longer than the capacity is trimmed to its root-side prefix.
  std::size_t insert_path(const std::vector<INodeRecord>& records, sim::Time now = 0);
  std::size_t invalidate(std::string_view path);
  std::size_t invalidate_id(INodeId id);
  std::size_t invalidate_prefix(std::string_view prefix);
  void clear();

  std::size_t size() const { return lru_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Cached paths in lexicographic order, one per line.
  std::string dump() const;
  std::vector<std::string> cached_paths() const;

  struct Stats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t evictions = 0;
    std::uint64_t invalidated = 0;
  };
  const Stats& stats() const { return stats_; }

 private:
  struct Node {
    std::string name;
    Node* parent = nullptr;
    std::map<std::string, std::unique_ptr<Node>, std::less<>> kids;
    bool has_record = false;
    CachedRecord rec;
    std::list<Node*>::iterator lru_pos;
  };

  Node* find(std::string_view path) const;
  void touch(Node* n);
  void drop_record(Node* n);
  void prune(Node* n);
  std::size_t count_and_unindex(Node* n);
  std::string path_of(const Node* n) const;
  void collect(const Node* n, std::string& prefix, std::vector<std::string>& out) const;

  std::size_t capacity_;
  std::unique_ptr<Node> root_;
  std::list<Node*> lru_;  // front = most recent
  std::unordered_map<INodeId, Node*> by_id_;
  Stats stats_;
};

}  // namespace lfs::cache
