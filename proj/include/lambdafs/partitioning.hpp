#pragma once

#include <cstdint>
#include <set>
#include <string_view>

namespace lfs::part {

std::uint64_t fnv1a64(std::string_view bytes);

/// Deployment owning the metadata of `path`: FNV-1a 64 of the parent path, mod n.
/// The root is owned by the deployment of "/".
int deployment_for(std::string_view path, int n_deployments);

/// Deployment that owns the children of directory `dir`.
int children_deployment(std::string_view dir, int n_deployments);

/// Accumulates the set of deployments caching any INode of a subtree.
class DeploymentSet {
 public:
  explicit DeploymentSet(int n_deployments) : n_(n_deployments) {}
  void add_path(std::string_view path, bool is_dir);
  const std::set<int>& members() const { return members_; }

 private:
  int n_;
  std::set<int> members_;
};

}  // namespace lfs::part
