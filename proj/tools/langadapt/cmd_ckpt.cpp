#include <cstdio>
#include <memory>
#include <string>

#include "commands.hpp"
#include "langadapt/train/checkpoint.hpp"

namespace langadapt::cli {

void add_ckpt_commands(CLI::App& app) {
  auto* ckpt = app.add_subcommand("ckpt", "Checkpoint utilities");
  ckpt->require_subcommand(1);
  auto path = std::make_shared<std::string>();
  auto* inspect = ckpt->add_subcommand("inspect", "Verify a checkpoint and print its header");
  inspect->add_option("--checkpoint", *path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  inspect->callback([path] { std::printf("%s\n", train::inspect_checkpoint(*path).c_str()); });
}

}  // namespace langadapt::cli
