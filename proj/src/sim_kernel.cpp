#include "lambdafs/sim_kernel.hpp"

#include <stdexcept>

namespace lfs::sim {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kRpcArrival: return "rpc-arrival";
    case EventKind::kRpcComplete: return "rpc-complete";
    case EventKind::kColdStartDone: return "cold-start-done";
    case EventKind::kTimeout: return "timeout";
    case EventKind::kInstanceReclaim: return "instance-reclaim";
    case EventKind::kInstanceCrash: return "instance-crash";
    case EventKind::kIntervalTick: return "interval-tick";
    case EventKind::kInternal: return "internal";
  }
  return "unknown";
}

EventHandle Simulator::schedule(Duration delay, EventKind kind, Action action) {
  if (delay < 0) throw std::invalid_argument("negative delay");
  return schedule_at(now_ + delay, kind, std::move(action));
}

EventHandle Simulator::schedule_at(Time when, EventKind kind, Action action) {
  if (when < now_) throw std::invalid_argument("event scheduled in the past");
  const std::uint64_t seq = next_seq_++;
  queue_.push(Entry{when, seq, kind, std::move(action)});
  live_.insert(seq);
  return EventHandle{seq};
}

bool Simulator::cancel(EventHandle handle) {
  return handle.seq != 0 && live_.erase(handle.seq) > 0;
}

bool Simulator::dispatch_one() {
  // priority_queue::top is const; the action is moved out through a const_cast
  // on an element that is popped immediately afterwards.
  Entry& top = const_cast<Entry&>(queue_.top());
  const Time fire_at = top.fire_at;
  const std::uint64_t seq = top.seq;
  const EventKind kind = top.kind;
  Action action = std::move(top.action);
  queue_.pop();
  if (live_.erase(seq) == 0) return false;
  now_ = fire_at;
  ++dispatched_;
  for (std::uint64_t word : {static_cast<std::uint64_t>(fire_at), seq, static_cast<std::uint64_t>(kind)}) {
    for (int i = 0; i < 8; ++i) {
      digest_ ^= (word >> (i * 8)) & 0xffU;
      digest_ *= 0x100000001b3ULL;
    }
  }
  if (record_log_) log_.push_back(LoggedEvent{fire_at, seq, kind});
  if (action) action();
  return true;
}

std::uint64_t Simulator::run_until(Time end) {
  if (end < now_) throw std::invalid_argument("run_until into the past");
  std::uint64_t count = 0;
  while (!queue_.empty() && queue_.top().fire_at <= end) {
    if (dispatch_one()) ++count;
  }
  now_ = end;
  return count;
}

std::uint64_t Simulator::run(Time limit) {
  std::uint64_t count = 0;
  while (!queue_.empty() && queue_.top().fire_at <= limit) {
    if (dispatch_one()) ++count;
  }
  return count;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t actor_kind, std::uint64_t actor_id) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ actor_kind) ^ actor_id);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: hi < lo");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next());
  // Lemire's multiply-shift; the bias is below 2^-40 for the spans used here.
  const unsigned __int128 product = static_cast<unsigned __int128>(next()) * span;
  return lo + static_cast<std::int64_t>(product >> 64);
}

double Rng::uniform01() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

const LatencyRange& LatencyModel::range(LatencyKind kind) const {
  switch (kind) {
    case LatencyKind::kTcp: return tcp;
    case LatencyKind::kHttp: return http;
    case LatencyKind::kStore: return store;
    case LatencyKind::kColdStart: return cold_start;
  }
  throw std::invalid_argument("unknown latency kind");
}

void LatencyModel::validate() const {
  for (auto kind : {LatencyKind::kTcp, LatencyKind::kHttp, LatencyKind::kStore, LatencyKind::kColdStart}) {
    const auto& r = range(kind);
    if (r.min <= 0 || r.min > r.max) throw std::invalid_argument("latency range must satisfy 0 < min <= max");
  }
}

Duration LatencyModel::sample(LatencyKind kind, Rng& rng) const {
  const auto& r = range(kind);
  return rng.uniform_int(r.min, r.max);
}

}  // namespace lfs::sim
