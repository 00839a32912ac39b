#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "langadapt/eval/preference.hpp"

namespace langadapt::eval {

struct Tally {
  std::size_t wins = 0;
  std::size_t losses = 0;
  std::size_t ties = 0;
  std::size_t total() const { return wins + losses + ties; }
  bool operator==(const Tally&) const = default;
};

struct WonBoth {
  std::string focal;
  std::vector<std::string> baselines;
  // Units are (prompt, judge kind, annotator) combinations in which that
  // annotator judged the focal model against every baseline.
  std::size_t units = 0;
  std::size_t won_both = 0;
  std::size_t lost_both = 0;
};

struct WinMatrix {
  std::vector<std::string> models;  // sorted
  // Ordered (row model, column model) cells from the row model's side.
  std::map<std::pair<std::string, std::string>, Tally> cells;
  std::size_t judgments = 0;
  std::optional<WonBoth> won_both;

  // Zero tally for pairs never judged.
  Tally at(const std::string& x, const std::string& y) const;
};

struct AggregateOptions {
  std::optional<std::string> focal;
  std::vector<std::string> baselines;
  // Restrict to one judge kind; nullopt pools both.
  std::optional<JudgeKind> judge;
};

// Unblinds each judgment through its pair and tallies it from both sides.
// Throws ValidationError on a judgment whose pair is unknown.
WinMatrix aggregate(std::span<const Judgment> judgments, std::span<const PreferencePair> pairs,
                    const AggregateOptions& options = {});

struct AggregateReport {
  WinMatrix pooled;
  WinMatrix human;
  WinMatrix model;
};

AggregateReport aggregate_by_judge(std::span<const Judgment> judgments,
                                   std::span<const PreferencePair> pairs,
                                   AggregateOptions options = {});

// JSON object with "models", "cells" [{model, opponent, wins, losses,
// ties}], "judgments" and optional "won_both".
std::string to_json(const WinMatrix& m);
std::string to_json(const AggregateReport& r);
// Bar-chart rows: judge,model,opponent,wins,ties,losses (row model side,
// each unordered pair once).
std::string to_csv(const AggregateReport& r);

}  // namespace langadapt::eval
