#pragma once

#include <CLI11.hpp>

namespace langadapt::cli {

// Each registers its subcommands on the root app. Handlers run inside the
// parse callbacks and signal failure by throwing.
void add_vocab_commands(CLI::App& app);
void add_train_commands(CLI::App& app);
void add_eval_commands(CLI::App& app);
void add_ckpt_commands(CLI::App& app);

}  // namespace langadapt::cli
