#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "harness.hpp"
#include "lambdafs/partitioning.hpp"

namespace lfs::testkit {

struct BuiltTree {
  std::set<int> deployments;
  // One path per cached INode kind: the root, each subdirectory and a few files.
  std::vector<std::string> sample;
  std::size_t entries = 0;
};

/// Builds a directory `root` with `entries` INodes (root included) whose
/// owning deployments cover exactly `k` of `n`. Subdirectory names are chosen
/// by searching for names whose children hash to a new deployment.
inline BuiltTree build_tree(store::MetadataStore& s, const std::string& root, int n, int k, std::size_t entries) {
  BuiltTree out;
  INodeId r = mkdirs(s, root);
  out.deployments.insert(part::deployment_for(root, n));
  out.deployments.insert(part::children_deployment(root, n));
  std::vector<std::pair<INodeId, std::string>> dirs{{r, root}};
  for (int i = 0; static_cast<int>(out.deployments.size()) < k; ++i) {
    if (i > 100000) throw std::runtime_error("build_tree: no name spans a new deployment");
    std::string name = "s" + std::to_string(i);
    std::string p = root + "/" + name;
    int d = part::children_deployment(p, n);
    if (out.deployments.count(d) != 0) continue;
    out.deployments.insert(d);
    dirs.emplace_back(s.create_direct(r, name, NodeKind::kDirectory), p);
  }
  if (static_cast<int>(out.deployments.size()) != k) throw std::runtime_error("build_tree: cannot span exactly k");
  std::size_t made = dirs.size();
  if (made > entries) throw std::runtime_error("build_tree: too few entries");
  for (const auto& [id, p] : dirs) out.sample.push_back(p);
  for (std::size_t i = 0; made < entries; ++i) {
    const auto& [dir, p] = dirs[i % dirs.size()];
    std::string name = "f" + std::to_string(i);
    s.create_direct(dir, name, NodeKind::kFile);
    if (i < 4 * dirs.size()) out.sample.push_back(p + "/" + name);
    ++made;
  }
  out.entries = made;
  return out;
}

}  // namespace lfs::testkit
