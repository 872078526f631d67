#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lambdafs/fs_types.hpp"
#include "lambdafs/sim_kernel.hpp"

namespace lfs::trace {

enum class EventType : std::uint8_t { kRoundOpen, kInv, kAck, kRoundDone, kCommit, kSubtree };
std::string_view to_string(EventType t);
EventType event_type_from_string(std::string_view s);

struct TraceWrite {
  bool erase = false;
  std::uint64_t id = 0;
  std::uint64_t parent = 0;
  std::string name;
  NodeKind kind = NodeKind::kFile;
  std::uint16_t perms = 0;
  sim::Time mtime = 0;
};

/// One protocol trace record. Fields unused by a given type stay default.
struct TraceEvent {
  EventType type = EventType::kCommit;
  sim::Time t = 0;
  std::uint64_t round = 0;
  std::uint64_t instance = 0;  // leader / INV receiver / ACK sender / txn owner
  std::string request_id;
  std::string inv_kind;  // "point" | "prefix"
  std::vector<std::string> paths;
  std::vector<int> targets;
  std::vector<std::uint64_t> required;
  bool ok = true;
  std::uint64_t txn = 0;
  std::vector<TraceWrite> writes;
  std::string subtree_event;  // set | clear | adopt | orphan
  std::string op_id;
  std::uint64_t root = 0;
};

std::string to_json_line(const TraceEvent& e);
TraceEvent from_json_line(const std::string& line);

class ProtocolTrace {
 public:
  void add(TraceEvent e) { events_.push_back(std::move(e)); }
  const std::vector<TraceEvent>& events() const { return events_; }
  std::vector<TraceEvent>& mutable_events() { return events_; }
  void write_jsonl(std::ostream& os) const;
  static ProtocolTrace read_jsonl(std::istream& is);

 private:
  std::vector<TraceEvent> events_;
};

}  // namespace lfs::trace
