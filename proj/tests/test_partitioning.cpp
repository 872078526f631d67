#include <gtest/gtest.h>

#include <cstdint>
#include <string>

#include "lambdafs/partitioning.hpp"
#include "lambdafs/path.hpp"

using namespace lfs;

namespace {

// Independent byte-wise FNV-1a 64 used as the reference.
std::uint64_t reference_fnv(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

TEST(Path, Normalization) {
  EXPECT_EQ(path::normalize("/a//b/./c/../d"), "/a/b/d");
  EXPECT_EQ(path::normalize("/"), "/");
  EXPECT_THROW(path::normalize("a/b"), std::invalid_argument);
  EXPECT_TRUE(path::is_normalized("/a/b"));
  EXPECT_FALSE(path::is_normalized("/a/../b"));
  EXPECT_FALSE(path::is_normalized("/a/"));
}

TEST(Path, ParentBasenamePrefix) {
  EXPECT_EQ(path::parent("/dir/note.pdf"), "/dir");
  EXPECT_EQ(path::parent("/dir"), "/");
  EXPECT_EQ(path::parent("/"), "/");
  EXPECT_EQ(path::basename("/dir/note.pdf"), "note.pdf");
  EXPECT_TRUE(path::has_prefix("/foo/bar", "/foo"));
  EXPECT_FALSE(path::has_prefix("/foobar", "/foo"));
  EXPECT_TRUE(path::has_prefix("/foo", "/"));
  EXPECT_EQ(path::rebase("/a/b/c", "/a/b", "/x"), "/x/c");
  EXPECT_EQ(path::depth("/a/b/c"), 3u);
  EXPECT_EQ(path::join("/", "a"), "/a");
}

TEST(Partitioning, HashMatchesReference) {
  for (const char* s : {"", "/", "/dir", "/a/b/c", "/spotify/user/42"}) {
    EXPECT_EQ(part::fnv1a64(s), reference_fnv(s)) << s;
  }
  EXPECT_EQ(part::fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(part::fnv1a64("/"), 0xaf63a24c860189feULL);
}

TEST(Partitioning, GoldenDeployments) {
  EXPECT_EQ(part::deployment_for("/dir/note.pdf", 8), 5);
  EXPECT_EQ(static_cast<int>(part::fnv1a64("/") % 8), 6);
  EXPECT_EQ(part::deployment_for("/foo", 8), 6);
  EXPECT_EQ(part::children_deployment("/foo", 8), 6);
  EXPECT_EQ(part::deployment_for("/a/x", 4), 1);
}

TEST(Partitioning, SiblingsShareDeployment) {
  EXPECT_EQ(part::deployment_for("/dir/a.txt", 8), part::deployment_for("/dir/b.txt", 8));
  for (const char* p : {"/", "/x", "/x/y/z"}) EXPECT_EQ(part::deployment_for(p, 1), 0);
  EXPECT_EQ(part::deployment_for("/", 8), part::children_deployment("/", 8));
}

TEST(Partitioning, DeploymentSetBounds) {
  part::DeploymentSet single(4);
  single.add_path("/a/f", false);
  EXPECT_EQ(single.members().size(), 1u);

  part::DeploymentSet one(1);
  one.add_path("/a", true);
  one.add_path("/a/b/c", false);
  EXPECT_EQ(one.members(), (std::set<int>{0}));

  // Files under k distinct parents touch at most min(k, n) deployments.
  part::DeploymentSet many(4);
  for (int i = 0; i < 10; ++i) many.add_path("/d" + std::to_string(i) + "/f", false);
  EXPECT_LE(many.members().size(), 4u);
  part::DeploymentSet three(8);
  for (int i = 0; i < 3; ++i) three.add_path("/d" + std::to_string(i) + "/f", false);
  EXPECT_LE(three.members().size(), 3u);
}
