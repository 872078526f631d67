#include "lambdafs/fs_types.hpp"

#include <array>
#include <stdexcept>
#include <string>

namespace lfs {

namespace {
constexpr std::array<std::string_view, kOpKindCount> kOpNames = {"create", "mkdir", "delete", "mv",
                                                                 "read",   "stat",  "ls",     "setattr"};
constexpr std::array<std::string_view, 9> kStatusNames = {
    "ok", "not_found", "already_exists", "not_directory", "malformed_path",
    "invalid_move", "subtree_conflict", "transport_failure", "give_up"};
}  // namespace

std::string_view to_string(OpKind kind) { return kOpNames[static_cast<std::size_t>(kind)]; }

OpKind op_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i) {
    if (kOpNames[i] == s) return static_cast<OpKind>(i);
  }
  throw std::invalid_argument("unknown operation kind: " + std::string(s));
}

bool is_read_op(OpKind kind) { return kind == OpKind::kRead || kind == OpKind::kStat || kind == OpKind::kLs; }

std::string_view to_string(FsStatus status) { return kStatusNames[static_cast<std::size_t>(status)]; }

FsStatus fs_status_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
    if (kStatusNames[i] == s) return static_cast<FsStatus>(i);
  }
  throw std::invalid_argument("unknown status: " + std::string(s));
}

bool is_final(FsStatus status) {
  return status != FsStatus::kTransportFailure && status != FsStatus::kGiveUp && status != FsStatus::kSubtreeConflict;
}

}  // namespace lfs
