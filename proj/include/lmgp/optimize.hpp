#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lmgp {

// Objective with separate cheap value and value+gradient paths. value() may
// return +inf for infeasible points (e.g. failed factorization); the
// optimizer never requests a gradient at an infinite point.
struct Objective {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> value_grad;
};

struct LbfgsOptions {
  int memory = 10;
  int max_iter = 500;
  double gtol = 1e-6;   // infinity norm of the projected gradient
  double ftol = 1e-10;  // relative objective decrease, two consecutive hits
  int max_line_search = 40;
};

struct StartResult {
  Eigen::VectorXd x0;
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  std::string termination;  // gtol | ftol | max-iter | line-search | infeasible-start
};

struct OptimizationReport {
  Eigen::VectorXd best_x;
  double best_f = 0.0;
  std::vector<StartResult> starts;
  std::uint64_t seed = 0;

  int best_index() const;
};

// Box-projected L-BFGS descent with backtracking Armijo line search along
// the projected path. Accepted iterates never increase the objective and
// always satisfy the bounds exactly.
StartResult minimize_lbfgs(const Objective& objective, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const LbfgsOptions& options = {});

// n_starts descents from fixed_starts (clipped to the box) followed by
// uniformly random interior points; a start whose objective is +inf is
// resampled up to 10 times, then skipped. Throws std::runtime_error when
// every start is infeasible. Deterministic in (seed, inputs).
OptimizationReport minimize_multistart(const Objective& objective,
                                       const Eigen::VectorXd& lower,
                                       const Eigen::VectorXd& upper, int n_starts,
                                       std::uint64_t seed,
                                       const LbfgsOptions& options = {},
                                       const std::vector<Eigen::VectorXd>& fixed_starts = {});

}  // namespace lmgp
