#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>

#include "lambdafs/cache_trie.hpp"
#include "lambdafs/coherence.hpp"
#include "lambdafs/faas_platform.hpp"
#include "lambdafs/fs_types.hpp"
#include "lambdafs/namespace_store.hpp"
#include "lambdafs/sim_kernel.hpp"

namespace lfs::nn {

using faas::InstanceId;

struct NameNodeConfig {
  // Records per instance cache; CacheTrie::kUnbounded disables eviction.
  std::size_t cache_capacity = cache::CacheTrie::kUnbounded;
  sim::Duration result_cache_ttl = sim::sec(30);
  std::array<sim::Duration, kOpKindCount> cpu_cost = {300, 300, 300, 500, 120, 100, 200, 200};
  sim::Duration result_cache_cpu = 20;
  std::size_t subtree_batch_size = 512;
  sim::Duration per_row_cost = 2;
  int max_revalidations = 16;
  // Debug fault: acknowledge invalidations without applying them.
  bool inject_stale_read = false;
};

struct RpcRequest {
  std::string request_id;
  std::uint64_t client = 0;
  FsOp op;
};

struct NameNodeStats {
  std::uint64_t requests = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t foreign_requests = 0;
  std::uint64_t result_cache_hits = 0;
  std::uint64_t retry_table_hits = 0;
  std::uint64_t subtree_ops = 0;
  std::uint64_t subtree_batches = 0;
  std::uint64_t offloaded_batches = 0;
  std::uint64_t prefix_invalidations = 0;
  std::uint64_t lost_requests = 0;
};

/// The NameNode logic of every live function instance: metadata cache, result
/// cache, read path, single-INode write protocol and subtree protocol.
class NameNodeService {
 public:
  using Reply = std::function<void(OpResult)>;

  NameNodeService(sim::Simulator& sim, store::MetadataStore& store, faas::Platform& platform,
                  coherence::Coordinator& coord, sim::LatencyModel latency, NameNodeConfig cfg, std::uint64_t seed);

  void on_ready(const faas::Instance& inst);
  void on_terminate(const faas::Instance& inst);

  /// Serves one request on `instance`. `reply` runs at the instance when the
  /// response is ready; it never runs if the instance dies first.
  void handle(InstanceId instance, RpcRequest req, Reply reply);

  bool is_live(InstanceId id) const;
  int deployment_of(InstanceId id) const;
  cache::CacheTrie* cache(InstanceId id);
  const NameNodeStats& stats() const { return stats_; }
  const NameNodeConfig& config() const { return cfg_; }

 private:
  struct CachedResult {
    OpResult result;
    sim::Time expires;
  };
  struct State {
    InstanceId id = faas::kNoInstance;
    int deployment = 0;
    std::shared_ptr<bool> alive;
    std::unique_ptr<cache::CacheTrie> cache;
    sim::Rng rng{1};
    std::unordered_map<std::string, CachedResult> results;
    std::deque<std::pair<sim::Time, std::string>> result_expiry;
  };
  struct SubtreeCtx;
  struct WriteCtx;

  State* state(InstanceId id);
  sim::Duration store_half(State& st);
  /// Runs `fn` at the store after one outbound leg, guarded by liveness.
  void at_store(State& st, sim::Duration extra, std::function<void()> fn);
  /// Runs `fn` back at the instance after one return leg, guarded by liveness.
  void at_instance(State& st, sim::Duration extra, std::function<void()> fn);
  std::function<void()> guard(State& st, std::function<void()> fn);
  void send_result(InstanceId inst, Reply done, OpResult r);

  void dispatch(State& st, const RpcRequest& req, Reply done);
  void serve_read(State& st, const RpcRequest& req, Reply done);
  void store_read(InstanceId inst, store::TxnId txn, std::string path, bool lock, int attempt,
                  std::function<void(store::StoreError, store::Resolution)> cb);
  void serve_write(State& st, const RpcRequest& req, Reply done);
  void write_attempt(std::shared_ptr<WriteCtx> ctx);
  void write_locked(std::shared_ptr<WriteCtx> ctx);
  void write_round(std::shared_ptr<WriteCtx> ctx);

  void serve_subtree(State& st, const RpcRequest& req, Reply done);
  void subtree_phase1(std::shared_ptr<SubtreeCtx> ctx);
  void subtree_phase2(std::shared_ptr<SubtreeCtx> ctx);
  void subtree_phase3(std::shared_ptr<SubtreeCtx> ctx);
  void subtree_run_wave(std::shared_ptr<SubtreeCtx> ctx);
  void subtree_final(std::shared_ptr<SubtreeCtx> ctx);
  void subtree_fail(std::shared_ptr<SubtreeCtx> ctx, FsStatus status);
  void run_batch(std::shared_ptr<SubtreeCtx> ctx, std::size_t batch, InstanceId executor);
  void batch_done(std::shared_ptr<SubtreeCtx> ctx, bool ok);
  void store_batch(std::shared_ptr<SubtreeCtx> ctx, std::size_t batch, InstanceId executor, std::function<void(bool)> cb);

  void on_invalidation(InstanceId id, const coherence::Invalidation& inv);
  void remember_result(State& st, const std::string& request_id, const OpResult& r);
  const OpResult* recall_result(State& st, const std::string& request_id);

  sim::Simulator& sim_;
  store::MetadataStore& store_;
  faas::Platform& platform_;
  coherence::Coordinator& coord_;
  sim::LatencyModel latency_;
  NameNodeConfig cfg_;
  std::uint64_t seed_;
  int n_deployments_;
  std::map<InstanceId, State> states_;
  std::map<InstanceId, std::map<std::uint64_t, std::function<void()>>> helper_watch_;
  std::uint64_t next_watch_ = 1;
  NameNodeStats stats_;
};

}  // namespace lfs::nn
