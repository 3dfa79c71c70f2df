#pragma once

#include <cstdint>
#include <memory>

#include "lmgp/gp.hpp"
#include "lmgp/optimize.hpp"

namespace lmgp {

struct FitConfig {
  ModelKind kind = ModelKind::LMGP;
  PriorStrategy prior = PriorStrategy::OneHotGrouped;
  NanFill nan_fill = NanFill::Zero;
  int d_z = 2;
  int random_width = -1;  // Random prior column count; -1 = sum of m_i
  int n_starts = 12;
  LbfgsOptions lbfgs;
  std::uint64_t seed = 0;
  bool continuation = true;  // two warm nugget-refinement passes
};

// One fitting problem: standardization, prior encoding, parameter packing
// [omega | latent entries | log10 delta] with Appendix-style box bounds
// (omega in [-8,3], LMGP A entries in [-1,1], LVGP coordinates in [-5,5]
// with constrained entries in [0,5], log10 delta in [-10,-1]).
class FitProblem {
 public:
  FitProblem(const MixedDataset& data, const FitConfig& cfg);

  Eigen::Index dim() const { return lower_.size(); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  const FitConfig& config() const { return cfg_; }

  double value(const Eigen::VectorXd& p);
  double value_grad(const Eigen::VectorXd& p, Eigen::VectorXd& grad);
  Objective objective();

  Hyperparameters unpack(const Eigen::VectorXd& p) const;
  Eigen::VectorXd pack(const Hyperparameters& hypers) const;

  // The always-included first start: omega = 0, small random latent entries,
  // log10 delta = -4.
  Eigen::VectorXd center_start() const;

  FittedModel finalize(const Eigen::VectorXd& p);

 private:
  std::vector<Eigen::MatrixXd> latent_blocks(const Eigen::VectorXd& p) const;

  FitConfig cfg_;
  MixedDataset original_;
  Standardizer standardizer_;
  std::shared_ptr<const PriorEncoder> encoder_;
  std::vector<int> level_counts_;
  std::unique_ptr<LikelihoodEngine> engine_;
  Eigen::Index dim_x_ = 0;     // engine-side quantitative dimension
  Eigen::Index latent_len_ = 0;
  Eigen::VectorXd lower_, upper_;
};

// Analytic gradient of the packed profile-likelihood objective; matches
// central finite differences of FitProblem::value.
Eigen::VectorXd likelihood_gradient(FitProblem& problem, const Eigen::VectorXd& p);

// Multi-start MLE with the nugget continuation schedule: the initial starts
// sample log10 delta across its full range, then two warm restarts from the
// incumbent with delta re-seeded at 0.1 and at incumbent/10. Ties within
// 1e-9 in L keep the smaller delta. `warm`, when given, is packed (clamped
// to the box) and prepended as an extra fixed start.
FittedModel fit_with_continuation(const MixedDataset& data, const FitConfig& cfg,
                                  OptimizationReport* report = nullptr,
                                  const Hyperparameters* warm = nullptr);

}  // namespace lmgp
