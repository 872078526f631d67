#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <random>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace lfs::sim {

/// Virtual time in microseconds.
using Time = std::int64_t;
using Duration = std::int64_t;

constexpr Duration usec(std::int64_t v) { return v; }
constexpr Duration msec(std::int64_t v) { return v * 1000; }
constexpr Duration sec(std::int64_t v) { return v * 1000 * 1000; }

enum class EventKind : std::uint8_t {
  kRpcArrival,
  kRpcComplete,
  kColdStartDone,
  kTimeout,
  kInstanceReclaim,
  kInstanceCrash,
  kIntervalTick,
  kInternal,
};

std::string_view to_string(EventKind kind);

/// Opaque handle returned by Simulator::schedule. A zero handle is never issued.
struct EventHandle {
  std::uint64_t seq = 0;
  explicit operator bool() const { return seq != 0; }
};

/// Deterministic discrete-event loop. Events with equal fire time dispatch in
/// scheduling order.
class Simulator {
 public:
  using Action = std::function<void()>;

  Time now() const { return now_; }

  EventHandle schedule(Duration delay, EventKind kind, Action action);
  EventHandle schedule_at(Time when, EventKind kind, Action action);

  /// Returns false when the event already fired or was cancelled.
  bool cancel(EventHandle handle);

  /// Dispatches every event with fire time <= end, then sets the clock to end.
  std::uint64_t run_until(Time end);

  /// Dispatches until the queue drains or `limit` is reached.
  std::uint64_t run(Time limit = std::numeric_limits<Time>::max());

  bool empty() const { return live_.empty(); }
  std::size_t pending() const { return live_.size(); }
  std::uint64_t dispatched() const { return dispatched_; }

  /// Rolling FNV-1a digest over (fire_at, seq, kind) of every dispatched event.
  std::uint64_t trace_digest() const { return digest_; }

  /// When enabled, every dispatch is appended to `event_log()`.
  void set_record_log(bool on) { record_log_ = on; }
  struct LoggedEvent {
    Time fire_at;
    std::uint64_t seq;
    EventKind kind;
  };
  const std::vector<LoggedEvent>& event_log() const { return log_; }

 private:
  struct Entry {
    Time fire_at;
    std::uint64_t seq;
    EventKind kind;
    Action action;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.seq > b.seq;
    }
  };

  bool dispatch_one();

  Time now_ = 0;
  std::uint64_t next_seq_ = 1;
  std::uint64_t dispatched_ = 0;
  std::uint64_t digest_ = 0xcbf29ce484222325ULL;
  bool record_log_ = false;
  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  std::unordered_set<std::uint64_t> live_;
  std::vector<LoggedEvent> log_;
};

/// Mixes a master seed with an actor identity (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t actor_kind, std::uint64_t actor_id);

/// Seeded random stream. The engine is std::mt19937_64; the value mappings are
/// written out explicitly so results do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Uniform double in [0, 1).
  double uniform01();
  /// Uniform double in (0, 1].
  double uniform_open01() { return 1.0 - uniform01(); }
  bool bernoulli(double p) { return uniform01() < p; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1)); }

 private:
  std::mt19937_64 engine_;
};

enum class LatencyKind : std::uint8_t { kTcp, kHttp, kStore, kColdStart };

struct LatencyRange {
  Duration min = 1;
  Duration max = 1;
};

struct LatencyModel {
  LatencyRange tcp{1000, 2000};
  LatencyRange http{8000, 20000};
  LatencyRange store{1000, 3000};
  LatencyRange cold_start{300000, 800000};

  const LatencyRange& range(LatencyKind kind) const;
  /// Throws std::invalid_argument if any range has min > max or min <= 0.
  void validate() const;
  Duration sample(LatencyKind kind, Rng& rng) const;
};

}  // namespace lfs::sim
