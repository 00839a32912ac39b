#include "langadapt/eval/aggregate.hpp"

#include <algorithm>
#include <set>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "langadapt/util/error.hpp"

namespace langadapt::eval {

namespace {

using json = nlohmann::json;

json matrix_json(const WinMatrix& m) {
  json cells = json::array();
  for (const auto& [key, t] : m.cells) {
    cells.push_back({{"model", key.first},
                     {"opponent", key.second},
                     {"wins", t.wins},
                     {"losses", t.losses},
                     {"ties", t.ties}});
  }
  json out{{"models", m.models}, {"cells", cells}, {"judgments", m.judgments}};
  if (m.won_both) {
    out["won_both"] = {{"focal", m.won_both->focal},
                       {"baselines", m.won_both->baselines},
                       {"units", m.won_both->units},
                       {"won_both", m.won_both->won_both},
                       {"lost_both", m.won_both->lost_both}};
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Tally WinMatrix::at(const std::string& x, const std::string& y) const {
  const auto it = cells.find({x, y});
  return it == cells.end() ? Tally{} : it->second;
}

WinMatrix aggregate(std::span<const Judgment> judgments, std::span<const PreferencePair> pairs,
                    const AggregateOptions& options) {
  std::unordered_map<std::string, const PreferencePair*> by_id;
  std::set<std::string> models;
  for (const auto& p : pairs) {
    by_id.emplace(p.pair_id, &p);
    models.insert(p.side_a.model_name);
    models.insert(p.side_b.model_name);
  }
  WinMatrix m;
  m.models.assign(models.begin(), models.end());
  // (prompt, judge, annotator) -> baseline -> focal outcome (+1, 0, -1).
  std::map<std::tuple<std::string, JudgeKind, std::string>, std::map<std::string, int>> focal_results;
  for (const auto& j : judgments) {
    const auto it = by_id.find(j.pair_id);
    if (it == by_id.end()) {
      throw ValidationError("judgment references unknown pair " + j.pair_id);
    }
    if (options.judge && j.judge != *options.judge) continue;
    const PreferencePair& p = *it->second;
    const std::string& a = p.side_a.model_name;
    const std::string& b = p.side_b.model_name;
    Tally& ab = m.cells[{a, b}];
    Tally& ba = m.cells[{b, a}];
    int a_outcome = 0;
    switch (j.choice) {
      case Choice::kA:
        ++ab.wins;
        ++ba.losses;
        a_outcome = 1;
        break;
      case Choice::kB:
        ++ab.losses;
        ++ba.wins;
        a_outcome = -1;
        break;
      case Choice::kTie:
        ++ab.ties;
        ++ba.ties;
        break;
    }
    ++m.judgments;
    if (options.focal && (a == *options.focal || b == *options.focal)) {
      const bool focal_is_a = a == *options.focal;
      const std::string& other = focal_is_a ? b : a;
      focal_results[{p.prompt_id, j.judge, j.annotator_id}][other] =
          focal_is_a ? a_outcome : -a_outcome;
    }
  }
  if (options.focal) {
    WonBoth wb;
    wb.focal = *options.focal;
    wb.baselines = options.baselines;
    if (wb.baselines.empty()) {
      for (const auto& name : m.models) {
        if (name != wb.focal) wb.baselines.push_back(name);
      }
    }
    for (const auto& [unit, outcomes] : focal_results) {
      bool complete = true, all_won = true, all_lost = true;
      for (const auto& base : wb.baselines) {
        const auto o = outcomes.find(base);
        if (o == outcomes.end()) {
          complete = false;
          break;
        }
        all_won = all_won && o->second > 0;
        all_lost = all_lost && o->second < 0;
      }
      if (!complete) continue;
      ++wb.units;
      if (all_won) ++wb.won_both;
      if (all_lost) ++wb.lost_both;
    }
    m.won_both = std::move(wb);
  }
  return m;
}

AggregateReport aggregate_by_judge(std::span<const Judgment> judgments,
                                   std::span<const PreferencePair> pairs, AggregateOptions options) {
  AggregateReport r;
  options.judge.reset();
  r.pooled = aggregate(judgments, pairs, options);
  options.judge = JudgeKind::kHuman;
  r.human = aggregate(judgments, pairs, options);
  options.judge = JudgeKind::kModel;
  r.model = aggregate(judgments, pairs, options);
  return r;
}

std::string to_json(const WinMatrix& m) { return matrix_json(m).dump(2); }

std::string to_json(const AggregateReport& r) {
  return json{{"pooled", matrix_json(r.pooled)},
              {"human", matrix_json(r.human)},
              {"model", matrix_json(r.model)}}
      .dump(2);
}

std::string to_csv(const AggregateReport& r) {
  std::string out = "judge,model,opponent,wins,ties,losses\n";
  const auto rows = [&](const WinMatrix& m, std::string_view label) {
    for (const auto& [key, t] : m.cells) {
      if (key.first > key.second) continue;
      out += std::string(label) + "," + csv_field(key.first) + "," + csv_field(key.second) + "," +
             std::to_string(t.wins) + "," + std::to_string(t.ties) + "," +
             std::to_string(t.losses) + "\n";
    }
  };
  rows(r.pooled, "pooled");
  rows(r.human, "human");
  rows(r.model, "model");
  return out;
}

}  // namespace langadapt::eval
