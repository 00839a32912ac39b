#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "langadapt/eval/aggregate.hpp"
#include "langadapt/eval/preference.hpp"

namespace langadapt::eval {

struct AnnotationConfig {
  std::uint64_t seed = 0;
  // While an annotator holds a pair no other annotator is offered it.
  bool exclusive = false;
  std::chrono::milliseconds lease_ttl{std::chrono::minutes(10)};
  // Append-only judgment log; existing entries are replayed at startup.
  std::filesystem::path judgments_path;
  AggregateOptions aggregate;
};

// Thread-safe task queue over a fixed pair set. Every public member takes
// one lock, so assignments and appends are linearizable.
class AnnotationService {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  // Throws ValidationError when the replayed log references an unknown
  // pair or repeats a (pair, annotator, judge) triple.
  AnnotationService(std::vector<PreferencePair> pairs, AnnotationConfig config,
                    Clock clock = std::chrono::steady_clock::now);

  std::string create_session();

  enum class NextStatus { kTask, kDone, kPending, kUnknownAnnotator };
  struct Next {
    NextStatus status = NextStatus::kDone;
    PreferencePair pair;  // valid for kTask
  };
  // The annotator's first unjudged pair in its seeded order. Repeated calls
  // return the same pair until it is judged. In exclusive mode pairs leased
  // to others are skipped; kPending means only such pairs remain.
  Next next_task(const std::string& annotator_id);

  enum class SubmitStatus { kCreated, kUnknownPair, kUnknownAnnotator, kDuplicate };
  SubmitStatus submit(const std::string& pair_id, const std::string& annotator_id, Choice choice,
                      JudgeKind judge = JudgeKind::kHuman);

  // Pooled and per-judge-kind tallies over a snapshot of the log.
  AggregateReport results() const;
  std::vector<Judgment> judgments() const;
  std::size_t pair_count() const { return pairs_.size(); }

 private:
  struct Lease {
    std::string annotator;
    std::chrono::steady_clock::time_point expires;
  };

  const std::vector<std::size_t>& order_for(const std::string& annotator_id);
  bool leased_to_other(std::size_t index, const std::string& annotator_id,
                       std::chrono::steady_clock::time_point now) const;
  void append_to_log(const Judgment& j);

  std::vector<PreferencePair> pairs_;
  AnnotationConfig config_;
  Clock clock_;
  std::unordered_map<std::string, std::size_t> index_;
  mutable std::mutex mutex_;
  std::set<std::string> annotators_;
  std::map<std::string, std::vector<std::size_t>> orders_;
  std::set<std::pair<std::size_t, std::string>> judged_;  // human judgments
  std::set<std::tuple<std::size_t, std::string, JudgeKind>> seen_;
  std::map<std::size_t, Lease> leases_;
  std::vector<Judgment> judgments_;
  std::ofstream log_;
  std::uint64_t session_counter_ = 0;
};

}  // namespace langadapt::eval
