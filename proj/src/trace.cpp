#include "lambdafs/trace.hpp"

#include <array>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace lfs::trace {

namespace {
constexpr std::array<std::string_view, 6> kNames = {"round_open", "inv", "ack", "round_done", "commit", "subtree"};
}

std::string_view to_string(EventType t) { return kNames[static_cast<std::size_t>(t)]; }

EventType event_type_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == s) return static_cast<EventType>(i);
  }
  throw std::invalid_argument("unknown trace event type: " + std::string(s));
}

std::string to_json_line(const TraceEvent& e) {
  nlohmann::ordered_json j;
  j["type"] = to_string(e.type);
  j["t"] = e.t;
  switch (e.type) {
    case EventType::kRoundOpen:
      j["round"] = e.round;
      j["leader"] = e.instance;
      j["request_id"] = e.request_id;
      j["inv_kind"] = e.inv_kind;
      j["paths"] = e.paths;
      j["targets"] = e.targets;
      j["required"] = e.required;
      break;
    case EventType::kInv:
      j["round"] = e.round;
      j["to"] = e.instance;
      break;
    case EventType::kAck:
      j["round"] = e.round;
      j["from"] = e.instance;
      break;
    case EventType::kRoundDone:
      j["round"] = e.round;
      j["ok"] = e.ok;
      break;
    case EventType::kCommit: {
      j["txn"] = e.txn;
      j["owner"] = e.instance;
      j["request_id"] = e.request_id;
      j["tag"] = e.op_id;
      nlohmann::ordered_json writes = nlohmann::ordered_json::array();
      for (const auto& w : e.writes) {
        nlohmann::ordered_json wj;
        wj["op"] = w.erase ? "erase" : "put";
        wj["id"] = w.id;
        if (!w.erase) {
          wj["parent"] = w.parent;
          wj["name"] = w.name;
          wj["kind"] = w.kind == NodeKind::kDirectory ? "directory" : "file";
          wj["perms"] = w.perms;
          wj["mtime"] = w.mtime;
        }
        writes.push_back(std::move(wj));
      }
      j["writes"] = std::move(writes);
      break;
    }
    case EventType::kSubtree:
      j["event"] = e.subtree_event;
      j["op_id"] = e.op_id;
      j["root"] = e.root;
      j["owner"] = e.instance;
      j["paths"] = e.paths;
      break;
  }
  return j.dump();
}

TraceEvent from_json_line(const std::string& line) {
  auto j = nlohmann::json::parse(line);
  TraceEvent e;
  e.type = event_type_from_string(j.at("type").get<std::string>());
  e.t = j.at("t").get<sim::Time>();
  switch (e.type) {
    case EventType::kRoundOpen:
      e.round = j.at("round").get<std::uint64_t>();
      e.instance = j.at("leader").get<std::uint64_t>();
      e.request_id = j.at("request_id").get<std::string>();
      e.inv_kind = j.at("inv_kind").get<std::string>();
      e.paths = j.at("paths").get<std::vector<std::string>>();
      e.targets = j.at("targets").get<std::vector<int>>();
      e.required = j.at("required").get<std::vector<std::uint64_t>>();
      break;
    case EventType::kInv:
      e.round = j.at("round").get<std::uint64_t>();
      e.instance = j.at("to").get<std::uint64_t>();
      break;
    case EventType::kAck:
      e.round = j.at("round").get<std::uint64_t>();
      e.instance = j.at("from").get<std::uint64_t>();
      break;
    case EventType::kRoundDone:
      e.round = j.at("round").get<std::uint64_t>();
      e.ok = j.at("ok").get<bool>();
      break;
    case EventType::kCommit:
      e.txn = j.at("txn").get<std::uint64_t>();
      e.instance = j.at("owner").get<std::uint64_t>();
      e.request_id = j.at("request_id").get<std::string>();
      e.op_id = j.value("tag", std::string());
      for (const auto& wj : j.at("writes")) {
        TraceWrite w;
        w.erase = wj.at("op").get<std::string>() == "erase";
        w.id = wj.at("id").get<std::uint64_t>();
        if (!w.erase) {
          w.parent = wj.at("parent").get<std::uint64_t>();
          w.name = wj.at("name").get<std::string>();
          w.kind = wj.at("kind").get<std::string>() == "directory" ? NodeKind::kDirectory : NodeKind::kFile;
          w.perms = wj.at("perms").get<std::uint16_t>();
          w.mtime = wj.at("mtime").get<sim::Time>();
        }
        e.writes.push_back(std::move(w));
      }
      break;
    case EventType::kSubtree:
      e.subtree_event = j.at("event").get<std::string>();
      e.op_id = j.at("op_id").get<std::string>();
      e.root = j.at("root").get<std::uint64_t>();
      e.instance = j.at("owner").get<std::uint64_t>();
      e.paths = j.at("paths").get<std::vector<std::string>>();
      break;
  }
  return e;
}

void ProtocolTrace::write_jsonl(std::ostream& os) const {
  for (const auto& e : events_) os << to_json_line(e) << '\n';
}

ProtocolTrace ProtocolTrace::read_jsonl(std::istream& is) {
  ProtocolTrace t;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    t.add(from_json_line(line));
  }
  return t;
}

}  // namespace lfs::trace
