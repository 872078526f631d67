#include <gtest/gtest.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "harness.hpp"
#include "lambdafs/partitioning.hpp"
#include "lambdafs/verify.hpp"

using namespace lfs;
using lfs::testkit::Cluster;
using lfs::testkit::op_of;

namespace {

trace::TraceEvent subtree_event(const std::string& ev, const std::string& op, const std::string& root, sim::Time t) {
  trace::TraceEvent e;
  e.type = trace::EventType::kSubtree;
  e.t = t;
  e.subtree_event = ev;
  e.op_id = op;
  e.paths = {root};
  return e;
}

}  // namespace

TEST(Verify, EmptyRunPasses) {
  auto rep = verify::verify_run({}, {}, {}, {});
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.history_ops, 0u);
}

TEST(Verify, SequentialOpsPass) {
  Cluster c;
  testkit::mkdirs(c.store, "/a");
  c.snapshot_initial();
  auto i = c.start_instance(part::deployment_for("/a/f", 4));
  EXPECT_EQ(c.call(i, op_of(OpKind::kCreate, "/a/f"), "1").status, FsStatus::kOk);
  EXPECT_EQ(c.call(i, op_of(OpKind::kStat, "/a/f"), "2").status, FsStatus::kOk);
  EXPECT_EQ(c.call(i, op_of(OpKind::kSetattr, "/a/f"), "3").status, FsStatus::kOk);
  EXPECT_EQ(c.call(i, op_of(OpKind::kRead, "/a/f"), "4").status, FsStatus::kOk);
  EXPECT_EQ(c.call(i, op_of(OpKind::kDelete, "/a/f"), "5").status, FsStatus::kOk);
  EXPECT_EQ(c.call(i, op_of(OpKind::kStat, "/a/f"), "6").status, FsStatus::kNotFound);
  auto rep = c.verify();
  EXPECT_TRUE(rep.ok()) << rep.to_json();
  EXPECT_GE(rep.reads_checked, 3u);
  EXPECT_EQ(rep.commits, 3u);
}

TEST(Verify, CorruptedSnapshotReportsFirstDivergence) {
  Cluster c;
  testkit::mkdirs(c.store, "/a");
  c.snapshot_initial();
  auto i = c.start_instance(part::deployment_for("/a/f", 4));
  ASSERT_EQ(c.call(i, op_of(OpKind::kCreate, "/a/f"), "1").status, FsStatus::kOk);
  auto fin = c.store.snapshot();
  std::erase_if(fin, [](const store::INodeRecord& r) { return r.name == "f"; });
  auto rep = verify::verify_run(c.initial, fin, c.trace.events(), c.history);
  EXPECT_FALSE(rep.ok());
  EXPECT_FALSE(rep.tree_matches);
  EXPECT_EQ(rep.first_divergence, "/a/f");
}

TEST(Verify, InjectedStaleReadIsCaught) {
  nn::NameNodeConfig nc;
  nc.inject_stale_read = true;
  Cluster c({}, nc);
  testkit::mkdirs(c.store, "/a");
  c.store.create_direct(*c.store.child(kRootId, "a"), "f", NodeKind::kFile);
  c.snapshot_initial();
  int dep = part::deployment_for("/a/f", 4);
  auto reader = c.start_instance(dep);
  auto writer = c.start_instance((dep + 1) % 4);
  ASSERT_EQ(c.call(reader, op_of(OpKind::kStat, "/a/f"), "r1").status, FsStatus::kOk);
  ASSERT_EQ(c.call(writer, op_of(OpKind::kSetattr, "/a/f"), "w1").status, FsStatus::kOk);
  ASSERT_EQ(c.call(reader, op_of(OpKind::kStat, "/a/f"), "r2").status, FsStatus::kOk);
  auto rep = c.verify();
  EXPECT_FALSE(rep.ok());
  EXPECT_GE(rep.stale_reads, 1u);
  ASSERT_FALSE(rep.violations.empty());
  EXPECT_EQ(rep.violations.front().check, "stale_read");
}

TEST(Verify, AcknowledgedWriteWithoutCommitIsALinearizabilityViolation) {
  verify::HistoryOp h;
  h.request_id = "ghost";
  h.op = op_of(OpKind::kCreate, "/x");
  h.invoke = 10;
  h.response = 20;
  auto rep = verify::verify_run({}, {}, {}, {h});
  EXPECT_EQ(rep.linearizability_violations, 1u);
  EXPECT_FALSE(rep.ok());
}

TEST(Verify, OverlappingSubtreeWindowsViolateIsolation) {
  std::vector<trace::TraceEvent> t{subtree_event("set", "op1", "/a", 10), subtree_event("set", "op2", "/a/b", 20),
                                   subtree_event("clear", "op1", "/a", 100), subtree_event("clear", "op2", "/a/b", 110)};
  auto rep = verify::verify_run({}, {}, t, {});
  EXPECT_EQ(rep.subtree_isolation_violations, 1u);

  std::vector<trace::TraceEvent> ok{subtree_event("set", "op1", "/a", 10), subtree_event("clear", "op1", "/a", 100),
                                    subtree_event("set", "op2", "/a/b", 100), subtree_event("clear", "op2", "/a/b", 110),
                                    subtree_event("set", "op3", "/c", 20), subtree_event("clear", "op3", "/c", 50)};
  EXPECT_EQ(verify::verify_run({}, {}, ok, {}).subtree_isolation_violations, 0u);
}

TEST(Verify, DoubleCommitOfOneRequestIsCaught) {
  trace::TraceEvent open;
  open.type = trace::EventType::kRoundOpen;
  open.round = 1;
  open.request_id = "r";
  trace::TraceEvent done;
  done.type = trace::EventType::kRoundDone;
  done.round = 1;
  done.t = 5;
  trace::TraceEvent commit;
  commit.type = trace::EventType::kCommit;
  commit.t = 10;
  commit.request_id = "r";
  auto rep = verify::verify_run({}, {}, {open, done, commit, commit}, {});
  EXPECT_EQ(rep.duplicate_commits, 1u);
  EXPECT_FALSE(rep.ok());
}

TEST(Verify, CommitBeforeRoundCompletesViolatesBarrier) {
  std::vector<store::INodeRecord> init(1);
  init[0].id = kRootId;
  init[0].kind = NodeKind::kDirectory;
  trace::TraceEvent commit;
  commit.type = trace::EventType::kCommit;
  commit.t = 10;
  commit.request_id = "w";
  trace::TraceWrite w;
  w.id = 2;
  w.parent = 1;
  w.name = "f";
  w.perms = 0644;
  commit.writes.push_back(w);
  auto fin = init;
  store::INodeRecord f;
  f.id = INodeId{2};
  f.parent = kRootId;
  f.name = "f";
  fin.push_back(f);
  auto rep = verify::verify_run(init, fin, {commit}, {});
  EXPECT_EQ(rep.barrier_violations, 1u);
  EXPECT_TRUE(rep.tree_matches);
}

TEST(Verify, TraceAndHistoryRoundTripThroughJsonl) {
  Cluster c;
  testkit::mkdirs(c.store, "/a");
  c.snapshot_initial();
  auto i = c.start_instance(0);
  c.call(i, op_of(OpKind::kMkdir, "/a/d"), "1");
  c.call(i, op_of(OpKind::kLs, "/a"), "2");
  std::stringstream ts;
  c.trace.write_jsonl(ts);
  auto back = trace::ProtocolTrace::read_jsonl(ts);
  ASSERT_EQ(back.events().size(), c.trace.events().size());
  std::stringstream hs;
  verify::write_history(hs, c.history);
  auto h = verify::read_history(hs);
  ASSERT_EQ(h.size(), c.history.size());
  std::istringstream ss(c.store.snapshot_jsonl());
  auto fin = verify::read_snapshot(ss);
  EXPECT_TRUE(verify::verify_run(c.initial, fin, back.events(), h).ok());
}

TEST(Verify, RandomConcurrentHistoriesPass) {
  const std::vector<std::string> paths{"/d/x", "/d/y", "/d/e", "/d/e/z"};
  const std::vector<OpKind> kinds{OpKind::kCreate, OpKind::kMkdir, OpKind::kDelete, OpKind::kStat,
                                  OpKind::kSetattr, OpKind::kRead, OpKind::kMv, OpKind::kLs};
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Cluster c({}, {}, seed);
    testkit::mkdirs(c.store, "/d");
    c.snapshot_initial();
    std::vector<faas::InstanceId> inst{c.start_instance(0), c.start_instance(3)};
    sim::Rng rng(seed);
    for (int round = 0; round < 3; ++round) {
      std::vector<std::optional<OpResult>> outs(2);
      for (int k = 0; k < 2; ++k) {
        OpKind kind = kinds[rng.index(kinds.size())];
        std::string p = paths[rng.index(paths.size())];
        std::string dst = kind == OpKind::kMv ? "/d/m" + std::to_string(round) + std::to_string(k) : "";
        c.send(inst[static_cast<std::size_t>(k)], op_of(kind, p, dst), std::to_string(round) + "-" + std::to_string(k),
               outs[static_cast<std::size_t>(k)]);
      }
      ASSERT_TRUE(c.wait({&outs[0], &outs[1]}));
    }
    auto rep = c.verify();
    EXPECT_TRUE(rep.ok()) << "seed " << seed << " " << rep.to_json();
  }
}
