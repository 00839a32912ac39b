#pragma once

#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "langadapt/eval/preference.hpp"

namespace langadapt::testing {

// Synthetic pairs over `models` for `n_prompts` prompts with seeded sides.
inline std::vector<eval::PreferencePair> synthetic_pairs(const std::vector<std::string>& models,
                                                         std::size_t n_prompts, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<eval::PreferencePair> pairs;
  for (std::size_t p = 0; p < n_prompts; ++p) {
    for (std::size_t i = 0; i < models.size(); ++i) {
      for (std::size_t j = i + 1; j < models.size(); ++j) {
        eval::PreferencePair pair;
        pair.pair_id = "p" + std::to_string(pairs.size());
        pair.prompt_id = "q" + std::to_string(p);
        pair.prompt = "prompt " + std::to_string(p);
        const bool swap = rng() & 1;
        pair.side_a = {swap ? models[j] : models[i], "r"};
        pair.side_b = {swap ? models[i] : models[j], "s"};
        pairs.push_back(pair);
      }
    }
  }
  return pairs;
}

inline std::vector<eval::Judgment> synthetic_judgments(const std::vector<eval::PreferencePair>& pairs,
                                                       std::size_t annotators, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<eval::Judgment> out;
  for (const auto& p : pairs) {
    for (std::size_t a = 0; a < annotators; ++a) {
      if (rng() % 4 == 0) continue;
      const eval::Choice c = static_cast<eval::Choice>(rng() % 3);
      out.push_back({p.pair_id, c, eval::JudgeKind::kHuman, "ann-" + std::to_string(a), ""});
    }
    if (rng() % 2) {
      out.push_back({p.pair_id, static_cast<eval::Choice>(rng() % 3), eval::JudgeKind::kModel,
                     "judge", ""});
    }
  }
  return out;
}

struct OracleTally {
  std::size_t wins = 0, losses = 0, ties = 0;
};

// Counts, for every ordered model pair, the outcomes seen from the first
// model's side by looking up each judgment's pair linearly.
inline std::map<std::pair<std::string, std::string>, OracleTally> brute_force_tally(
    const std::vector<eval::Judgment>& judgments, const std::vector<eval::PreferencePair>& pairs,
    std::optional<eval::JudgeKind> only = std::nullopt) {
  std::map<std::pair<std::string, std::string>, OracleTally> t;
  for (const auto& j : judgments) {
    if (only && j.judge != *only) continue;
    for (const auto& p : pairs) {
      if (p.pair_id != j.pair_id) continue;
      const std::string& a = p.side_a.model_name;
      const std::string& b = p.side_b.model_name;
      if (j.choice == eval::Choice::kTie) {
        ++t[{a, b}].ties;
        ++t[{b, a}].ties;
      } else {
        const std::string& w = j.choice == eval::Choice::kA ? a : b;
        const std::string& l = j.choice == eval::Choice::kA ? b : a;
        ++t[{w, l}].wins;
        ++t[{l, w}].losses;
      }
    }
  }
  return t;
}

}  // namespace langadapt::testing
