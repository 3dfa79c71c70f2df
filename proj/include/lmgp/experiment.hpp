#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lmgp/bayesopt.hpp"
#include "lmgp/fit.hpp"

namespace lmgp {

inline constexpr const char* kToolVersion = "0.1.0";

// Invalid or inconsistent configuration; the CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Fit, Predict, LatentExport, Sweep, Varlen, Sensitivity, Bo };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Sweep;

  int function_id = 3;       // benchmark-driven experiments
  std::string dataset_path;  // user data for fit / latent
  std::string input_path;    // prediction inputs
  std::string model_path;    // artifact to load (predict/latent) or write (fit)
  std::string candidates_path;  // external BO pool

  std::vector<ModelKind> models = {ModelKind::LMGP};
  PriorStrategy prior = PriorStrategy::OneHotGrouped;
  std::vector<int> train_sizes;        // empty: 100/200/300/400 (sweep), 400 (varlen)
  std::vector<double> noise_variances; // empty: presets {0, small, large} / {small, large}
  int replicates = 10;
  int test_size = 10000;
  long n_base = 1L << 14;  // sensitivity base sample count
  double train_fraction = 1.0;  // fit on user data: seeded train/test split

  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = ".";

  // Optimizer section.
  int n_starts = 12;
  int d_z = 2;
  LbfgsOptions lbfgs;

  // BO section.
  int bo_init = 40;
  int bo_pool = 240;
  int bo_seeds = 30;
  Direction bo_direction = Direction::Maximize;
  std::optional<int> bo_budget;

  // Effective fit configuration for one model kind.
  FitConfig fit_config(ModelKind kind, std::uint64_t fit_seed) const;
};

// Reads the JSON experiment file ({"experiment": {...}, "optimizer": {...},
// "bo": {...}}), applies protocol defaults, and validates. Referenced input
// paths must exist. Throws ConfigError.
ExperimentConfig load_config(const std::string& path);

// FNV-1a over the canonical serialized form of the effective config; recorded
// in every result CSV alongside kToolVersion.
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Each runner writes its CSVs under cfg.out_dir and returns 0 (all cells
// succeeded) or 2 (some cells failed and were recorded as such).
int run_benchmark_sweep(const ExperimentConfig& cfg);
int run_varlen_experiment(const ExperimentConfig& cfg);
int run_sensitivity(const ExperimentConfig& cfg);
int run_bo_race(const ExperimentConfig& cfg);
int run_fit(const ExperimentConfig& cfg);
int run_predict(const ExperimentConfig& cfg);
int run_latent_export(const ExperimentConfig& cfg);

// Dispatch on cfg.kind.
int run_experiment(const ExperimentConfig& cfg);

}  // namespace lmgp
