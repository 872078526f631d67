#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lambdafs/sim_kernel.hpp"

namespace lfs {

enum class INodeId : std::uint64_t {};
inline constexpr INodeId kNoINode{0};
inline constexpr INodeId kRootId{1};
constexpr std::uint64_t to_u64(INodeId id) { return static_cast<std::uint64_t>(id); }

enum class NodeKind : std::uint8_t { kFile, kDirectory };

enum class OpKind : std::uint8_t { kCreate, kMkdir, kDelete, kMv, kRead, kStat, kLs, kSetattr };
inline constexpr int kOpKindCount = 8;

std::string_view to_string(OpKind kind);
OpKind op_kind_from_string(std::string_view s);
bool is_read_op(OpKind kind);

enum class FsStatus : std::uint8_t {
  kOk,
  kNotFound,
  kAlreadyExists,
  kNotDirectory,
  kMalformedPath,
  kInvalidMove,
  kSubtreeConflict,
  kTransportFailure,
  kGiveUp,
};

std::string_view to_string(FsStatus status);
FsStatus fs_status_from_string(std::string_view s);
/// Namespace outcomes are final; transport failures and subtree conflicts are retried by clients.
bool is_final(FsStatus status);

/// A namespace operation as submitted by a client. Paths are normalized.
struct FsOp {
  OpKind kind = OpKind::kRead;
  std::string path;
  std::string dst;  // mv only
  std::uint16_t perms = 0644;
};

/// Value of one path viewed as a register: id == 0 means "absent".
struct PathValue {
  std::string path;
  std::uint64_t id = 0;
  sim::Time mtime = 0;

  bool present() const { return id != 0; }
  friend bool operator==(const PathValue&, const PathValue&) = default;
};

struct OpResult {
  FsStatus status = FsStatus::kOk;
  // Leaf record observed (reads) or produced (create/mkdir/setattr).
  std::uint64_t id = 0;
  sim::Time mtime = 0;
  NodeKind kind = NodeKind::kFile;
  std::uint32_t children = 0;
};

}  // namespace lfs
