#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "test_support.hpp"

namespace langadapt {
namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult cli(const std::string& args) {
  const std::string cmd = std::string(LANGADAPT_CLI_PATH) + " " + args + " 2>&1";
  CliResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("tokenize --bogus").code, 2);
  EXPECT_EQ(cli("tokenize --vocab " + q(testing::fixture("minimal.vocab"))).code, 2);
}

TEST(Cli, HelpListsFlags) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases{
      {"--help", {"vocab", "tokenize", "recipe", "pretrain", "sft", "eval", "ckpt"}},
      {"vocab merge --help", {"--base", "--ext", "--out", "--report"}},
      {"tokenize --help", {"--vocab", "--text", "--file", "--ids"}},
      {"recipe run --help", {"--config", "--seed", "--allow-skip", "--stages"}},
      {"pretrain --help", {"--corpus", "--ko-weight", "--en-weight", "--block-size", "--steps"}},
      {"sft --help", {"--instructions", "--template", "--allow-skip", "--languages"}},
      {"eval classify --help", {"--checkpoint", "--tasks", "--length-normalize"}},
      {"eval pref build --help", {"--model", "--prompts", "--out", "--seed"}},
      {"eval pref judge --help", {"--pairs", "--judgments", "--judge", "--endpoint", "--max-retries"}},
      {"eval pref serve --help", {"--pairs", "--judgments", "--port", "--exclusive", "--static-dir"}},
      {"eval pref report --help", {"--pairs", "--judgments", "--out-json", "--out-csv", "--focal"}},
      {"ckpt inspect --help", {"--checkpoint"}},
  };
  for (const auto& [args, flags] : cases) {
    const CliResult r = cli(args);
    EXPECT_EQ(r.code, 0) << args;
    for (const auto& f : flags) EXPECT_NE(r.out.find(f), std::string::npos) << args << " " << f;
  }
}

TEST(Cli, MergeThenTokenize) {
  testing::TempDir dir;
  const CliResult merge = cli("vocab merge --base " + q(testing::fixture("llama2_subset.vocab")) +
                        " --ext " + q(testing::fixture("ko_subset.vocab")) + " --out " +
                        q(dir / "merged.vocab"));
  ASSERT_EQ(merge.code, 0) << merge.out;
  EXPECT_NE(merge.out.find("\"merged_size\""), std::string::npos);
  const CliResult tok = cli("tokenize --vocab " + q(dir / "merged.vocab") + " --text '햄버거를 먹는 공룡'");
  ASSERT_EQ(tok.code, 0) << tok.out;
  EXPECT_EQ(tok.out, "햄 버 거 를 ▁먹는 ▁ 공 룡\n");
}

TEST(Cli, RecipeInspectClassifyAndPreferencePipeline) {
  testing::TempDir dir;
  const CliResult run = cli("recipe run --config " + q(testing::fixture("run.toml")) + " --output " +
                      q(dir / "model.blsm") + " --metrics " + q(dir / "metrics.csv"));
  ASSERT_EQ(run.code, 0) << run.out;
  EXPECT_NE(run.out.find("stages: [expand, pretrain, sft]"), std::string::npos) << run.out;

  const CliResult inspect = cli("ckpt inspect --checkpoint " + q(dir / "model.blsm"));
  ASSERT_EQ(inspect.code, 0) << inspect.out;
  EXPECT_NE(inspect.out.find("\"stages\""), std::string::npos);

  const CliResult classify = cli("eval classify --checkpoint " + q(dir / "model.blsm") + " --tasks " +
                           q(testing::fixture("tasks.jsonl")) + " --out " + q(dir / "m.csv"));
  ASSERT_EQ(classify.code, 0) << classify.out;
  EXPECT_NE(classify.out.find("accuracy"), std::string::npos);

  std::ofstream(dir / "prompts.txt") << "공룡은 무엇을 먹나요?\nWhat is a model?\n";
  const CliResult build = cli("eval pref build --model a=" + q(dir / "model.blsm") + " --model b=" +
                        q(dir / "model.blsm") + " --prompts " + q(dir / "prompts.txt") +
                        " --out " + q(dir / "pairs.jsonl") + " --max-new 4");
  ASSERT_EQ(build.code, 0) << build.out;
  const CliResult judge = cli("eval pref judge --pairs " + q(dir / "pairs.jsonl") + " --judgments " +
                        q(dir / "j.jsonl"));
  ASSERT_EQ(judge.code, 0) << judge.out;
  EXPECT_NE(judge.out.find("judged 2 pairs"), std::string::npos) << judge.out;
  const CliResult again = cli("eval pref judge --pairs " + q(dir / "pairs.jsonl") + " --judgments " +
                        q(dir / "j.jsonl"));
  EXPECT_NE(again.out.find("2 already judged"), std::string::npos) << again.out;
  const CliResult report = cli("eval pref report --pairs " + q(dir / "pairs.jsonl") + " --judgments " +
                         q(dir / "j.jsonl") + " --out-csv " + q(dir / "r.csv"));
  ASSERT_EQ(report.code, 0) << report.out;
  EXPECT_NE(report.out.find("\"pooled\""), std::string::npos);
}

TEST(Cli, RuntimeErrorsExitWithOne) {
  testing::TempDir dir;
  std::ofstream(dir / "bad.toml") << "stages = [\"sft\"]\n[paths]\nbase_vocab = \"x\"\n";
  const CliResult r = cli("recipe run --config " + q(dir / "bad.toml"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.out.rfind("error: ", 0), 0u) << r.out;
}

}  // namespace
}  // namespace langadapt
