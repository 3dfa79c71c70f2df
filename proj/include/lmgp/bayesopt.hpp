#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lmgp/fit.hpp"
#include "lmgp/gp.hpp"

namespace lmgp {

enum class Direction { Maximize, Minimize };

// Closed-form expected improvement of a Gaussian prediction over the best
// observed response. sigma = 0 degenerates to max(s*(mu - y_best), 0).
double expected_improvement(double mu, double sigma, double y_best, Direction direction);

struct CandidatePool {
  CategoricalSchema schema;
  Eigen::VectorXd x_lo, x_hi;
  std::vector<MixedSample> samples;
  Eigen::VectorXd responses;  // true values revealed on evaluation
  std::vector<bool> evaluated;

  std::size_t size() const { return samples.size(); }
  int count_evaluated() const;
  int best_index(Direction direction) const;  // over true responses
};

struct BoStep {
  int iteration = 0;
  int chosen = 0;  // pool index
  double observed = 0.0;
  double incumbent = 0.0;
};

struct BoTrajectory {
  std::vector<int> init_indices;
  std::vector<BoStep> steps;
  int additional_evaluations = 0;
  bool found_target = false;
};

// Argmax of EI over unevaluated candidates; ties broken by lowest index.
int bo_step(const FittedModel& model, const CandidatePool& pool, Direction direction,
            double y_best);

struct BoConfig {
  int init_size = 40;
  Direction direction = Direction::Maximize;
  FitConfig fit;  // model kind, prior, optimizer settings
  std::uint64_t seed = 0;
  // Stop when the pool's known optimum is chosen (TargetFound); otherwise
  // stop after budget additional evaluations.
  std::optional<int> budget;
  bool exclude_optimum_from_init = true;  // race protocol: optimum must be earned
  bool warm_start = true;                 // reuse incumbent hyperparameters as one start
};

// Pool-based BO: draw a random initial design, then loop
// fit -> EI argmax -> reveal. A mid-run fit failure is retried once with a
// shifted seed, then the run aborts with the partial trajectory.
BoTrajectory bo_run(CandidatePool pool, const BoConfig& config);

// Seeded random-search baseline on the same protocol; returns the number of
// additional draws until the pool optimum (after the same initial design).
int random_search_baseline(const CandidatePool& pool, int init_size, Direction direction,
                           std::uint64_t seed, bool exclude_optimum_from_init = true);

}  // namespace lmgp
