#include "langadapt/eval/annotation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

#include "langadapt/util/error.hpp"

namespace langadapt::eval {

AnnotationService::AnnotationService(std::vector<PreferencePair> pairs, AnnotationConfig config,
                                     Clock clock)
    : pairs_(std::move(pairs)), config_(std::move(config)), clock_(std::move(clock)) {
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (!index_.emplace(pairs_[i].pair_id, i).second) {
      throw ValidationError("duplicate pair_id " + pairs_[i].pair_id);
    }
  }
  if (config_.judgments_path.empty()) return;
  for (Judgment& j : load_judgments(config_.judgments_path)) {
    const auto it = index_.find(j.pair_id);
    if (it == index_.end()) {
      throw ValidationError("judgment log references unknown pair " + j.pair_id);
    }
    if (!seen_.emplace(it->second, j.annotator_id, j.judge).second) {
      throw ValidationError("judgment log repeats pair " + j.pair_id + " for " + j.annotator_id);
    }
    if (j.judge == JudgeKind::kHuman) {
      annotators_.insert(j.annotator_id);
      judged_.emplace(it->second, j.annotator_id);
    }
    judgments_.push_back(std::move(j));
  }
  if (config_.judgments_path.has_parent_path()) {
    std::filesystem::create_directories(config_.judgments_path.parent_path());
  }
  log_.open(config_.judgments_path, std::ios::app | std::ios::binary);
  if (!log_) {
    throw IoError("cannot open judgment log " + config_.judgments_path.string());
  }
}

std::string AnnotationService::create_session() {
  std::lock_guard lock(mutex_);
  std::mt19937_64 rng(config_.seed ^ (0x5851F42D4C957F2DULL * (++session_counter_)));
  std::string id;
  do {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "ann-%04llu-%08llx",
                  static_cast<unsigned long long>(session_counter_),
                  static_cast<unsigned long long>(rng() & 0xFFFFFFFFULL));
    id = buf;
  } while (annotators_.count(id) != 0);
  annotators_.insert(id);
  return id;
}

const std::vector<std::size_t>& AnnotationService::order_for(const std::string& annotator_id) {
  auto it = orders_.find(annotator_id);
  if (it != orders_.end()) return it->second;
  std::vector<std::size_t> order(pairs_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq(annotator_id.begin(), annotator_id.end());
  std::mt19937_64 rng(seq);
  rng.discard(1);
  std::mt19937_64 mixed(rng() ^ config_.seed);
  std::shuffle(order.begin(), order.end(), mixed);
  return orders_.emplace(annotator_id, std::move(order)).first->second;
}

bool AnnotationService::leased_to_other(std::size_t index, const std::string& annotator_id,
                                        std::chrono::steady_clock::time_point now) const {
  const auto it = leases_.find(index);
  return it != leases_.end() && it->second.annotator != annotator_id && it->second.expires > now;
}

AnnotationService::Next AnnotationService::next_task(const std::string& annotator_id) {
  std::lock_guard lock(mutex_);
  if (annotators_.count(annotator_id) == 0) return {NextStatus::kUnknownAnnotator, {}};
  const auto now = clock_();
  bool blocked = false;
  for (const std::size_t index : order_for(annotator_id)) {
    if (judged_.count({index, annotator_id}) != 0) continue;
    if (config_.exclusive) {
      if (leased_to_other(index, annotator_id, now)) {
        blocked = true;
        continue;
      }
      // Release any other pair this annotator was holding.
      for (auto it = leases_.begin(); it != leases_.end();) {
        it = it->second.annotator == annotator_id && it->first != index ? leases_.erase(it)
                                                                          : std::next(it);
      }
      leases_[index] = Lease{annotator_id, now + config_.lease_ttl};
    }
    return {NextStatus::kTask, pairs_[index]};
  }
  return {blocked ? NextStatus::kPending : NextStatus::kDone, {}};
}

AnnotationService::SubmitStatus AnnotationService::submit(const std::string& pair_id,
                                                          const std::string& annotator_id,
                                                          Choice choice, JudgeKind judge) {
  std::lock_guard lock(mutex_);
  const auto it = index_.find(pair_id);
  if (it == index_.end()) return SubmitStatus::kUnknownPair;
  if (judge == JudgeKind::kHuman && annotators_.count(annotator_id) == 0) {
    return SubmitStatus::kUnknownAnnotator;
  }
  if (!seen_.emplace(it->second, annotator_id, judge).second) return SubmitStatus::kDuplicate;
  Judgment j{pair_id, choice, judge, annotator_id, utc_timestamp()};
  try {
    append_to_log(j);
  } catch (...) {
    seen_.erase({it->second, annotator_id, judge});
    throw;
  }
  if (judge == JudgeKind::kHuman) judged_.emplace(it->second, annotator_id);
  const auto lease = leases_.find(it->second);
  if (lease != leases_.end() && lease->second.annotator == annotator_id) leases_.erase(lease);
  judgments_.push_back(std::move(j));
  return SubmitStatus::kCreated;
}

void AnnotationService::append_to_log(const Judgment& j) {
  if (!log_.is_open()) return;
  log_ << to_json(j) << '\n';
  log_.flush();
  if (!log_) throw IoError("failed to append to " + config_.judgments_path.string());
}

AggregateReport AnnotationService::results() const {
  std::vector<Judgment> snapshot;
  {
    std::lock_guard lock(mutex_);
    snapshot = judgments_;
  }
  return aggregate_by_judge(snapshot, pairs_, config_.aggregate);
}

std::vector<Judgment> AnnotationService::judgments() const {
  std::lock_guard lock(mutex_);
  return judgments_;
}

}  // namespace langadapt::eval
