#include <atomic>
#include <csignal>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "commands.hpp"
#include "langadapt/eval/aggregate.hpp"
#include "langadapt/eval/annotation.hpp"
#include "langadapt/eval/annotation_server.hpp"
#include "langadapt/eval/harness.hpp"
#include "langadapt/eval/judge.hpp"
#include "langadapt/train/checkpoint.hpp"
#include "langadapt/util/error.hpp"
#include "langadapt/util/files.hpp"

namespace langadapt::cli {

namespace {

struct ClassifyArgs {
  std::string checkpoint, tasks, out;
  bool length_normalize = false;
};

struct BuildArgs {
  std::vector<std::string> models;
  std::string prompts, out;
  std::uint64_t seed = 0;
  int max_new = 64;
  double temperature = 0.0;
};

struct JudgeArgs {
  std::string pairs, judgments;
  std::string judge = "mock";
  std::string endpoint;
  std::string token_env = "JUDGE_API_TOKEN";
  int timeout_ms = 30000;
  int max_retries = 3;
};

struct ServeArgs {
  std::string pairs, judgments, host = "127.0.0.1", static_dir;
  int port = 8080;
  bool exclusive = false;
  int lease_seconds = 600;
  std::uint64_t seed = 0;
};

struct ReportArgs {
  std::string pairs, judgments, out_json, out_csv, focal;
  std::vector<std::string> baselines;
};

void run_classify(const ClassifyArgs& a) {
  const train::Checkpoint ckpt = train::load_checkpoint(a.checkpoint);
  const auto tasks = eval::load_tasks(a.tasks);
  if (tasks.empty()) throw ValidationError("no tasks in " + a.tasks);
  const model::TransformerLm lm(ckpt.model);
  const auto result = eval::evaluate(lm, ckpt.vocab, tasks, {.length_normalize = a.length_normalize});
  const std::string csv = eval::metrics_csv(result);
  if (a.out.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_file_atomic(a.out, csv);
    std::printf("accuracy %.4f, macro-F1 %.4f over %zu tasks\n", result.metrics.accuracy,
                result.metrics.macro_f1, tasks.size());
  }
}

std::vector<std::string> read_prompts(const std::string& path) {
  std::vector<std::string> prompts;
  const std::string text = read_file(path);
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) prompts.push_back(std::move(line));
    start = end + 1;
  }
  if (prompts.empty()) throw ValidationError("no prompts in " + path);
  return prompts;
}

void run_build(const BuildArgs& a) {
  std::vector<std::string> names;
  std::vector<std::unique_ptr<train::Checkpoint>> checkpoints;
  for (const auto& spec : a.models) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw ValidationError("--model expects name=checkpoint, got '" + spec + "'");
    }
    names.push_back(spec.substr(0, eq));
    checkpoints.push_back(
        std::make_unique<train::Checkpoint>(train::load_checkpoint(spec.substr(eq + 1))));
  }
  const model::GenerationSettings settings{a.max_new, a.temperature, a.seed};
  std::vector<std::unique_ptr<model::TransformerLm>> lms;
  std::vector<std::unique_ptr<eval::LmResponder>> responders;
  std::vector<eval::Contestant> contestants;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    lms.push_back(std::make_unique<model::TransformerLm>(checkpoints[i]->model));
    responders.push_back(
        std::make_unique<eval::LmResponder>(*lms.back(), checkpoints[i]->vocab, settings));
    contestants.push_back({names[i], responders.back().get()});
  }
  const auto prompts = read_prompts(a.prompts);
  const auto pairs = eval::build_preference_batch(contestants, prompts, a.seed);
  write_file_atomic(a.out, eval::pairs_to_jsonl(pairs));
  std::printf("wrote %zu pairs to %s\n", pairs.size(), a.out.c_str());
}

void run_judge(const JudgeArgs& a) {
  const auto pairs = eval::load_pairs(a.pairs);
  std::unique_ptr<eval::JudgeClient> client;
  if (a.judge == "mock") {
    client = std::make_unique<eval::MockJudge>();
  } else {
    if (a.endpoint.empty()) throw CLI::RequiredError("--endpoint (with --judge http)");
    eval::HttpJudgeConfig cfg;
    cfg.endpoint = a.endpoint;
    cfg.token_env = a.token_env;
    cfg.timeout = std::chrono::milliseconds(a.timeout_ms);
    cfg.max_retries = a.max_retries;
    client = std::make_unique<eval::HttpJudgeClient>(cfg);
  }
  auto log = eval::load_judgments(a.judgments);
  std::vector<eval::PreferencePair> todo;
  for (const auto& p : pairs) {
    bool done = false;
    for (const auto& j : log) {
      if (j.pair_id == p.pair_id && j.judge == eval::JudgeKind::kModel &&
          j.annotator_id == client->id()) {
        done = true;
        break;
      }
    }
    if (!done) todo.push_back(p);
  }
  const auto run = eval::judge_all(todo, *client);
  log.insert(log.end(), run.judgments.begin(), run.judgments.end());
  write_file_atomic(a.judgments, eval::judgments_to_jsonl(log));
  for (const auto& [pair_id, message] : run.protocol_errors) {
    std::fprintf(stderr, "protocol error on %s: %s\n", pair_id.c_str(), message.c_str());
  }
  std::printf("judged %zu pairs, %zu protocol errors, %zu already judged\n",
              run.judgments.size(), run.protocol_errors.size(), pairs.size() - todo.size());
}

eval::AnnotationServer* g_server = nullptr;

extern "C" void stop_server(int) {
  if (g_server != nullptr) g_server->stop();
}

void run_serve(const ServeArgs& a) {
  eval::AnnotationConfig cfg;
  cfg.seed = a.seed;
  cfg.exclusive = a.exclusive;
  cfg.lease_ttl = std::chrono::seconds(a.lease_seconds);
  cfg.judgments_path = a.judgments;
  eval::AnnotationService service(eval::load_pairs(a.pairs), cfg);
  eval::AnnotationServer server(service);
  if (!a.static_dir.empty()) server.mount_static(a.static_dir);
  const int port = server.bind(a.host, a.port);
  if (port < 0) throw IoError("cannot bind " + a.host + ":" + std::to_string(a.port));
  std::printf("serving %zu pairs on http://%s:%d\n", service.pair_count(), a.host.c_str(), port);
  std::fflush(stdout);
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  server.serve();
  g_server = nullptr;
}

void run_report(const ReportArgs& a) {
  const auto pairs = eval::load_pairs(a.pairs);
  const auto judgments = eval::load_judgments(a.judgments);
  eval::AggregateOptions opts;
  if (!a.focal.empty()) opts.focal = a.focal;
  opts.baselines = a.baselines;
  const auto report = eval::aggregate_by_judge(judgments, pairs, opts);
  const std::string json_text = eval::to_json(report) + "\n";
  if (a.out_json.empty()) {
    std::fputs(json_text.c_str(), stdout);
  } else {
    write_file_atomic(a.out_json, json_text);
  }
  if (!a.out_csv.empty()) write_file_atomic(a.out_csv, eval::to_csv(report));
}

}  // namespace

void add_eval_commands(CLI::App& app) {
  auto* ev = app.add_subcommand("eval", "Benchmark scoring and pairwise preference evaluation");
  ev->require_subcommand(1);

  auto c = std::make_shared<ClassifyArgs>();
  auto* classify = ev->add_subcommand("classify", "Log-likelihood option scoring over a task file");
  classify->add_option("--checkpoint", c->checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  classify->add_option("--tasks", c->tasks, "Task JSONL")->required()->check(CLI::ExistingFile);
  classify->add_option("--out", c->out, "Metrics CSV output (stdout if omitted)");
  classify->add_flag("--length-normalize", c->length_normalize, "Divide option log-probabilities by byte length");
  classify->callback([c] { run_classify(*c); });

  auto* pref = ev->add_subcommand("pref", "Blinded pairwise preference evaluation");
  pref->require_subcommand(1);

  auto b = std::make_shared<BuildArgs>();
  auto* build = pref->add_subcommand("build", "Generate responses and build blinded pairs");
  build->add_option("--model", b->models, "name=checkpoint, at least twice")->required()->expected(2, -1);
  build->add_option("--prompts", b->prompts, "One prompt per line")->required()->check(CLI::ExistingFile);
  build->add_option("--out", b->out, "Pairs JSONL output")->required();
  build->add_option("--seed", b->seed, "Side-assignment and sampling seed")->capture_default_str();
  build->add_option("--max-new", b->max_new, "Tokens generated per response")->capture_default_str();
  build->add_option("--temperature", b->temperature, "0 for greedy decoding")->capture_default_str();
  build->callback([b] { run_build(*b); });

  auto j = std::make_shared<JudgeArgs>();
  auto* judge = pref->add_subcommand("judge", "Collect model-judge verdicts into the judgment log");
  judge->add_option("--pairs", j->pairs, "Pairs JSONL")->required()->check(CLI::ExistingFile);
  judge->add_option("--judgments", j->judgments, "Judgment log (JSONL, appended)")->required();
  judge->add_option("--judge", j->judge, "mock or http")->check(CLI::IsMember({"mock", "http"}))->capture_default_str();
  judge->add_option("--endpoint", j->endpoint, "Judge URL for --judge http");
  judge->add_option("--token-env", j->token_env, "Env var holding the judge bearer token")->capture_default_str();
  judge->add_option("--timeout-ms", j->timeout_ms, "Per-request timeout")->capture_default_str();
  judge->add_option("--max-retries", j->max_retries, "Retries after a transport failure")->capture_default_str();
  judge->callback([j] { run_judge(*j); });

  auto s = std::make_shared<ServeArgs>();
  auto* serve = pref->add_subcommand("serve", "Run the annotation HTTP service");
  serve->add_option("--pairs", s->pairs, "Pairs JSONL")->required()->check(CLI::ExistingFile);
  serve->add_option("--judgments", s->judgments, "Judgment log (JSONL, appended)")->required();
  serve->add_option("--host", s->host, "Bind address")->capture_default_str();
  serve->add_option("--port", s->port, "Port (0 picks a free one)")->capture_default_str();
  serve->add_flag("--exclusive", s->exclusive, "Never hand one pair to two annotators at once");
  serve->add_option("--lease-seconds", s->lease_seconds, "Exclusive lease lifetime")->capture_default_str();
  serve->add_option("--static-dir", s->static_dir, "Serve a frontend bundle from this directory")
      ->check(CLI::ExistingDirectory);
  serve->add_option("--seed", s->seed, "Per-annotator order seed")->capture_default_str();
  serve->callback([s] { run_serve(*s); });

  auto r = std::make_shared<ReportArgs>();
  auto* report = pref->add_subcommand("report", "Aggregate judgments into win matrices");
  report->add_option("--pairs", r->pairs, "Pairs JSONL")->required()->check(CLI::ExistingFile);
  report->add_option("--judgments", r->judgments, "Judgment log")->required()->check(CLI::ExistingFile);
  report->add_option("--out-json", r->out_json, "Results JSON (stdout if omitted)");
  report->add_option("--out-csv", r->out_csv, "Bar-chart CSV");
  report->add_option("--focal", r->focal, "Model for the won-both statistic");
  report->add_option("--baseline", r->baselines, "Baselines for won-both (default: all others)");
  report->callback([r] { run_report(*r); });
}

}  // namespace langadapt::cli
