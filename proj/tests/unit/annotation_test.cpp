#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "langadapt/eval/annotation.hpp"
#include "langadapt/util/error.hpp"
#include "langadapt/util/files.hpp"
#include "tally_oracle.hpp"
#include "test_support.hpp"

namespace langadapt::eval {
namespace {

using Status = AnnotationService::NextStatus;
using Submit = AnnotationService::SubmitStatus;

std::vector<PreferencePair> pairs(std::size_t prompts = 5) {
  return testing::synthetic_pairs({"m1", "m2", "m3"}, prompts, 4);
}

TEST(Annotation, SessionsAreDistinct) {
  AnnotationService s(pairs(), {});
  std::set<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.insert(s.create_session());
  EXPECT_EQ(ids.size(), 50u);
}

TEST(Annotation, WalksEveryPairOnce) {
  AnnotationService s(pairs(), {});
  const auto id = s.create_session();
  std::set<std::string> seen;
  for (;;) {
    const auto next = s.next_task(id);
    if (next.status == Status::kDone) break;
    ASSERT_EQ(next.status, Status::kTask);
    EXPECT_EQ(s.next_task(id).pair.pair_id, next.pair.pair_id);  // stable until judged
    EXPECT_TRUE(seen.insert(next.pair.pair_id).second);
    ASSERT_EQ(s.submit(next.pair.pair_id, id, Choice::kA), Submit::kCreated);
  }
  EXPECT_EQ(seen.size(), s.pair_count());
  EXPECT_EQ(s.judgments().size(), s.pair_count());
}

TEST(Annotation, SubmitStatuses) {
  AnnotationService s(pairs(), {});
  const auto id = s.create_session();
  const auto p = s.next_task(id).pair.pair_id;
  EXPECT_EQ(s.submit("nope", id, Choice::kA), Submit::kUnknownPair);
  EXPECT_EQ(s.submit(p, "stranger", Choice::kA), Submit::kUnknownAnnotator);
  EXPECT_EQ(s.submit(p, id, Choice::kB), Submit::kCreated);
  EXPECT_EQ(s.submit(p, id, Choice::kA), Submit::kDuplicate);
  EXPECT_EQ(s.submit(p, "judge-x", Choice::kTie, JudgeKind::kModel), Submit::kCreated);
  EXPECT_EQ(s.next_task("stranger").status, Status::kUnknownAnnotator);
}

TEST(Annotation, OrdersAreSeededPerAnnotator) {
  const auto ps = pairs(20);
  AnnotationService a(ps, {.seed = 1});
  AnnotationService b(ps, {.seed = 1});
  const auto ia = a.create_session();
  const auto ib = b.create_session();
  ASSERT_EQ(ia, ib);
  EXPECT_EQ(a.next_task(ia).pair.pair_id, b.next_task(ib).pair.pair_id);
  std::set<std::string> firsts;
  for (int i = 0; i < 10; ++i) firsts.insert(a.next_task(a.create_session()).pair.pair_id);
  EXPECT_GT(firsts.size(), 1u);
}

TEST(Annotation, LogIsReplayedOnStartup) {
  testing::TempDir dir;
  const auto ps = pairs();
  AnnotationConfig cfg;
  cfg.judgments_path = dir / "judgments.jsonl";
  std::string id, first;
  {
    AnnotationService s(ps, cfg);
    id = s.create_session();
    first = s.next_task(id).pair.pair_id;
    ASSERT_EQ(s.submit(first, id, Choice::kA), Submit::kCreated);
  }
  const auto log = read_file(cfg.judgments_path);
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 1);
  AnnotationService again(ps, cfg);
  EXPECT_EQ(again.judgments().size(), 1u);
  EXPECT_EQ(again.submit(first, id, Choice::kB), Submit::kDuplicate);
  EXPECT_NE(again.next_task(id).pair.pair_id, first);
  EXPECT_EQ(again.results().pooled.judgments, 1u);
}

TEST(Annotation, CorruptLogIsRejected) {
  testing::TempDir dir;
  AnnotationConfig cfg;
  cfg.judgments_path = dir / "judgments.jsonl";
  const std::string line = to_json(Judgment{"p0", Choice::kA, JudgeKind::kHuman, "a", ""}) + "\n";
  write_file_atomic(cfg.judgments_path, line + line);
  EXPECT_THROW(AnnotationService(pairs(), cfg), ValidationError);
  write_file_atomic(cfg.judgments_path,
                    to_json(Judgment{"zz", Choice::kA, JudgeKind::kHuman, "a", ""}) + "\n");
  EXPECT_THROW(AnnotationService(pairs(), cfg), ValidationError);
}

TEST(Annotation, ExclusiveLeasesAndExpiry) {
  auto now = std::chrono::steady_clock::time_point{};
  AnnotationConfig cfg;
  cfg.exclusive = true;
  cfg.lease_ttl = std::chrono::seconds(30);
  const auto one = testing::synthetic_pairs({"m1", "m2"}, 1, 1);
  AnnotationService s(one, cfg, [&] { return now; });
  const auto a = s.create_session();
  const auto b = s.create_session();
  EXPECT_EQ(s.next_task(a).status, Status::kTask);
  EXPECT_EQ(s.next_task(b).status, Status::kPending);
  now += std::chrono::seconds(31);
  EXPECT_EQ(s.next_task(b).status, Status::kTask);
  EXPECT_EQ(s.next_task(a).status, Status::kPending);
  EXPECT_EQ(s.submit(one[0].pair_id, b, Choice::kTie), Submit::kCreated);
  EXPECT_EQ(s.next_task(b).status, Status::kDone);
  EXPECT_EQ(s.next_task(a).status, Status::kTask);
}

TEST(Annotation, ConcurrentExclusiveAnnotatorsNeverShareAPair) {
  testing::TempDir dir;
  AnnotationConfig cfg;
  cfg.exclusive = true;
  cfg.judgments_path = dir / "j.jsonl";
  const auto ps = pairs(30);
  AnnotationService s(ps, cfg);
  constexpr int kAnnotators = 8;
  std::mutex held_mutex;
  // Pair -> annotator, inserted after next_task and erased before submit,
  // i.e. strictly inside the lease.
  std::map<std::string, std::string> held;
  std::atomic<int> violations{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < kAnnotators; ++t) {
    threads.emplace_back([&] {
      const auto id = s.create_session();
      for (;;) {
        const auto next = s.next_task(id);
        if (next.status == Status::kDone) break;
        if (next.status == Status::kPending) {
          std::this_thread::yield();
          continue;
        }
        {
          std::lock_guard lock(held_mutex);
          if (!held.emplace(next.pair.pair_id, id).second) ++violations;
        }
        std::this_thread::yield();
        {
          std::lock_guard lock(held_mutex);
          held.erase(next.pair.pair_id);
        }
        if (s.submit(next.pair.pair_id, id, Choice::kA) != Submit::kCreated) ++violations;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(violations.load(), 0);
  EXPECT_EQ(s.judgments().size(), ps.size() * kAnnotators);
  const auto log = read_file(cfg.judgments_path);
  EXPECT_EQ(static_cast<std::size_t>(std::count(log.begin(), log.end(), '\n')),
            ps.size() * kAnnotators);
  EXPECT_EQ(parse_judgments(log).size(), ps.size() * kAnnotators);
}

}  // namespace
}  // namespace langadapt::eval
