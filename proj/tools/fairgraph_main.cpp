// fairgraph: prepare datasets, train fair encoders, evaluate and sweep.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fairgraph/commands.hpp"
#include "fairgraph/config.hpp"
#include "fairgraph/error.hpp"

using namespace fairgraph;

namespace {

struct CommonOptions {
  std::string config;
  Overrides overrides;
  double lambda = 0.0;
  uint64_t seed = 0;
  size_t epochs = 0;
  std::string out;
  std::vector<double> lambdas;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool sweep) {
  cmd->add_option("-c,--config", o.config, "run config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--lambda", o.lambda, "override fairness.lambda");
  cmd->add_option("--seed", o.seed, "override training.seed");
  cmd->add_option("--epochs", o.epochs, "override training.epochs");
  cmd->add_option("--out", o.out, "override output.dir");
  if (sweep) cmd->add_option("--lambdas", o.lambdas, "override fairness.sweep_lambdas")->delimiter(',');
}

RunConfig resolve(CLI::App* cmd, CommonOptions& o) {
  RunConfig config = load_config(o.config);
  if (cmd->count("--lambda")) o.overrides.lambda = o.lambda;
  if (cmd->count("--seed")) o.overrides.seed = o.seed;
  if (cmd->count("--epochs")) o.overrides.epochs = o.epochs;
  if (cmd->count("--out")) o.overrides.out = o.out;
  if (cmd->get_option_no_throw("--lambdas") && cmd->count("--lambdas")) o.overrides.lambdas = o.lambdas;
  apply_overrides(config, o.overrides);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compositional fair graph embeddings"};
  app.footer("Environment: FAIRGRAPH_DATA_ROOT resolves relative dataset paths.\n"
             "Exit codes: 0 ok, 2 config, 3 data, 4 numeric, 5 compatibility, 1 internal.\n\n" +
             config_reference());
  app.require_subcommand(1);

  CommonOptions prepare_opts, train_opts, eval_opts, sweep_opts;
  std::string checkpoint;
  auto* prepare = app.add_subcommand("prepare", "build the dataset directory from raw inputs");
  add_common(prepare, prepare_opts, false);
  auto* train = app.add_subcommand("train", "train an encoder and write a checkpoint");
  add_common(train, train_opts, false);
  auto* evaluate = app.add_subcommand("evaluate", "probe leakage and task metrics of a checkpoint");
  add_common(evaluate, eval_opts, false);
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint file (default: the config's run directory)");
  auto* sweep = app.add_subcommand("sweep", "train and evaluate one run per lambda");
  add_common(sweep, sweep_opts, true);

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit cleanly; every other parse failure is a usage error.
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (prepare->parsed()) {
      cmd_prepare(resolve(prepare, prepare_opts), &std::cerr);
    } else if (train->parsed()) {
      const auto dir = cmd_train(resolve(train, train_opts), &std::cerr);
      std::cout << dir.string() << '\n';
    } else if (evaluate->parsed()) {
      std::optional<std::filesystem::path> path;
      if (!checkpoint.empty()) path = checkpoint;
      for (const auto& r : cmd_evaluate(resolve(evaluate, eval_opts), path)) std::cout << r.to_table() << '\n';
    } else if (sweep->parsed()) {
      std::filesystem::path dir;
      std::cout << curve_csv(cmd_sweep(resolve(sweep, sweep_opts), &std::cerr, &dir));
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}
