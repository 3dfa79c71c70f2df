#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lmgp/experiment.hpp"

namespace {

struct SubcommandSpec {
  const char* name;
  const char* description;
  lmgp::ExperimentKind kind;
};

constexpr SubcommandSpec kSubcommands[] = {
    {"fit", "Fit a model to a dataset CSV and save the artifact", lmgp::ExperimentKind::Fit},
    {"predict", "Predict with a saved model over an input CSV", lmgp::ExperimentKind::Predict},
    {"latent", "Export canonicalized latent positions", lmgp::ExperimentKind::LatentExport},
    {"sweep", "Benchmark accuracy sweep over sizes and noise levels",
     lmgp::ExperimentKind::Sweep},
    {"varlen", "Variable-length input experiment", lmgp::ExperimentKind::Varlen},
    {"sensitivity", "Total-effect sensitivity indices", lmgp::ExperimentKind::Sensitivity},
    {"bo", "Pool-based Bayesian-optimization race", lmgp::ExperimentKind::Bo},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("lmgp ") + lmgp::kToolVersion +
               " - mixed-variable Gaussian-process metamodeling"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> jobs;

  for (const SubcommandSpec& spec : kSubcommands) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.description);
    sub->add_option("--config", config_path, "experiment config file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override experiment.seed");
    sub->add_option("--out", out_dir, "override experiment.out");
    sub->add_option("--jobs", jobs, "worker threads for independent cells")
        ->check(CLI::PositiveNumber);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    lmgp::ExperimentConfig cfg = lmgp::load_config(config_path);
    for (const SubcommandSpec& spec : kSubcommands) {
      if (app.got_subcommand(spec.name) && cfg.kind != spec.kind)
        throw lmgp::ConfigError(std::string("config declares a different experiment kind than "
                                            "the '") +
                                spec.name + "' subcommand");
    }
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    if (jobs) cfg.jobs = *jobs;
    return lmgp::run_experiment(cfg);
  } catch (const lmgp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
