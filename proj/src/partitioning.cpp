#include "lambdafs/partitioning.hpp"

#include <stdexcept>

#include "lambdafs/path.hpp"

namespace lfs::part {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int children_deployment(std::string_view dir, int n_deployments) {
  if (n_deployments <= 0) throw std::invalid_argument("n_deployments must be positive");
  return static_cast<int>(fnv1a64(dir) % static_cast<std::uint64_t>(n_deployments));
}

int deployment_for(std::string_view p, int n_deployments) {
  return children_deployment(path::parent(p), n_deployments);
}

void DeploymentSet::add_path(std::string_view p, bool is_dir) {
  members_.insert(deployment_for(p, n_));
  if (is_dir) members_.insert(children_deployment(p, n_));
}

}  // namespace lfs::part
