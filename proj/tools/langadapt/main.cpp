#include <cstdio>
#include <exception>

#include "commands.hpp"

namespace {

constexpr int kUsageError = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"langadapt: vocabulary expansion, bilingual pretraining, instruction tuning and "
               "evaluation for small causal language models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "langadapt 0.1.0");
  langadapt::cli::add_vocab_commands(app);
  langadapt::cli::add_train_commands(app);
  langadapt::cli::add_eval_commands(app);
  langadapt::cli::add_ckpt_commands(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
