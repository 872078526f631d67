#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "lambdafs/cache_trie.hpp"

using namespace lfs;
using lfs::cache::CacheTrie;
using lfs::store::INodeRecord;

namespace {

/// Root-to-leaf record chain for `path` with ids assigned by depth from `base`.
std::vector<INodeRecord> chain(const std::string& path, std::uint64_t base = 100) {
  std::vector<INodeRecord> out;
  INodeRecord root;
  root.id = kRootId;
  root.kind = NodeKind::kDirectory;
  out.push_back(root);
  std::size_t i = 1;
  std::uint64_t next = base;
  while (i < path.size()) {
    std::size_t j = path.find('/', i);
    if (j == std::string::npos) j = path.size();
    INodeRecord r;
    r.id = INodeId{next++};
    r.parent = out.back().id;
    r.name = path.substr(i, j - i);
    r.kind = j == path.size() ? NodeKind::kFile : NodeKind::kDirectory;
    out.push_back(r);
    i = j + 1;
  }
  return out;
}

}  // namespace

TEST(CacheTrie, EmptyCacheMisses) {
  CacheTrie c;
  auto r = c.lookup("/a/b");
  EXPECT_FALSE(r.hit);
  EXPECT_EQ(r.cached_depth, 0u);
}

TEST(CacheTrie, InsertedPathHitsWithAllRecords) {
  CacheTrie c;
  EXPECT_EQ(c.insert_path(chain("/nts/notes.txt")), 0u);
  auto r = c.lookup("/nts/notes.txt");
  ASSERT_TRUE(r.hit);
  EXPECT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records.back().name, "notes.txt");
}

TEST(CacheTrie, PrefixOfCachedPathHits) {
  CacheTrie c;
  c.insert_path(chain("/a/b/c"));
  EXPECT_TRUE(c.lookup("/a/b").hit);
  EXPECT_FALSE(c.lookup("/a/x").hit);
  EXPECT_EQ(c.lookup("/a/x").cached_depth, 2u);
}

TEST(CacheTrie, ReinsertIsIdempotent) {
  CacheTrie c(10);
  c.insert_path(chain("/a/b"));
  std::size_t before = c.size();
  EXPECT_EQ(c.insert_path(chain("/a/b")), 0u);
  EXPECT_EQ(c.size(), before);
}

TEST(CacheTrie, CapacityEvictsLeastRecent) {
  CacheTrie c(4);
  c.insert_path(chain("/a/x", 100));
  c.insert_path(chain("/b/y", 200));
  EXPECT_LE(c.size(), 4u);
  EXPECT_TRUE(c.lookup("/b/y").hit);
  EXPECT_GT(c.stats().evictions, 0u);
}

TEST(CacheTrie, ChainLongerThanCapacityIsTrimmed) {
  CacheTrie c(2);
  std::size_t evicted = c.insert_path(chain("/a/b"));
  EXPECT_EQ(evicted, 0u);
  EXPECT_EQ(c.size(), 2u);
  EXPECT_FALSE(c.lookup("/a/b").hit);
  EXPECT_TRUE(c.lookup("/a").hit);
}

TEST(CacheTrie, FullCacheEvictsPriorRecord) {
  CacheTrie c(2);
  c.insert_path(chain("/a", 100));
  EXPECT_EQ(c.size(), 2u);
  std::size_t evicted = c.insert_path(chain("/b/c", 200));
  EXPECT_GE(evicted, 1u);
  EXPECT_LE(c.size(), 2u);
  EXPECT_FALSE(c.lookup("/a").hit);
}

TEST(CacheTrie, UnboundedNeverEvicts) {
  CacheTrie c;
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(c.insert_path(chain("/d/f" + std::to_string(i), 10 + 2 * i)), 0u);
}

TEST(CacheTrie, PointInvalidation) {
  CacheTrie c;
  EXPECT_EQ(c.invalidate("/a/f"), 0u);
  c.insert_path(chain("/a/f"));
  EXPECT_EQ(c.invalidate("/a/f"), 1u);
  EXPECT_FALSE(c.lookup("/a/f").hit);
  EXPECT_TRUE(c.lookup("/a").hit);
  EXPECT_EQ(c.invalidate("/a/f"), 0u);
}

TEST(CacheTrie, PrefixInvalidationRemovesSubtree) {
  CacheTrie c;
  for (int i = 0; i < 999; ++i) {
    auto ch = chain("/foo/f" + std::to_string(i), 1000);
    ch[1].id = INodeId{50};  // same /foo record in every chain
    ch[2].id = INodeId{static_cast<std::uint64_t>(1000 + i)};
    ch[2].parent = INodeId{50};
    c.insert_path(ch);
  }
  c.insert_path(chain("/bar", 5));
  EXPECT_EQ(c.invalidate_prefix("/foo"), 1000u);
  EXPECT_TRUE(c.lookup("/bar").hit);
  EXPECT_EQ(c.invalidate_prefix("/nothing"), 0u);
  EXPECT_GT(c.invalidate_prefix("/"), 0u);
  EXPECT_EQ(c.size(), 0u);
}

TEST(CacheTrie, InvalidateById) {
  CacheTrie c;
  auto ch = chain("/a/f", 300);
  c.insert_path(ch);
  EXPECT_EQ(c.invalidate_id(ch[2].id), 1u);
  EXPECT_FALSE(c.lookup("/a/f").hit);
}
