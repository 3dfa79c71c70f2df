#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lmgp/encoding.hpp"
#include "lmgp/schema.hpp"

namespace lmgp {

enum class ModelKind { GP, LMGP, LVGP };

struct Hyperparameters {
  Eigen::VectorXd omega;  // d_x log10 roughness values
  LatentMap map;          // kind None for a pure-numeric GP
  double delta = 0.0;     // statistical nugget
};

struct PredictivePoint {
  double mean = 0.0;
  double variance = 0.0;
};

// Conditioning repair applied to the diagonal before every Cholesky,
// independent of (and reported separately from) the statistical nugget.
inline constexpr double kDiagFloor = 1e-12;

// exp{-sum_i 10^{omega_i} (x_i - x2_i)^2}
double gaussian_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                            const Eigen::VectorXd& omega);

// exp{-||z(t) - z(t')||^2 - sum_i 10^{omega_i} (x_i - x2_i)^2}; covers GP
// (empty map), LMGP, and LVGP latent parameterizations.
double mixed_correlation(const MixedSample& w, const MixedSample& w2,
                         const Hyperparameters& hypers);

// R_delta[i][j] = mixed_correlation(w_i, w_j) + delta * [i == j].
Eigen::MatrixXd build_correlation_matrix(const MixedDataset& data,
                                         const Hyperparameters& hypers);

// Generalized least squares through the Cholesky factor; never inverts R.
Eigen::VectorXd profile_beta(const Eigen::MatrixXd& R_delta, const Eigen::MatrixXd& F,
                             const Eigen::VectorXd& y);

// (1/n) (y - F beta)' R_delta^{-1} (y - F beta); clamped to 1e-300 when
// roundoff drives it nonpositive.
double profile_sigma2(const Eigen::MatrixXd& R_delta, const Eigen::MatrixXd& F,
                      const Eigen::VectorXd& y, const Eigen::VectorXd& beta);

// L = n log(sigma2_hat) + log|R_delta| evaluated on the data exactly as
// given (no standardization). Returns +inf when the Cholesky fails.
double neg_log_profile_likelihood(const Hyperparameters& hypers, const MixedDataset& data);

// Affine input/output scaling applied before fitting and undone at
// prediction: x to [0,1] per coordinate, y to zero mean / unit variance.
struct Standardizer {
  Eigen::VectorXd x_lo, x_hi;
  double y_mean = 0.0, y_std = 1.0;

  static Standardizer fit(const MixedDataset& data);

  Eigen::VectorXd scale_x(const Eigen::VectorXd& x) const;
  double scale_y(double y) const { return (y - y_mean) / y_std; }
  double unscale_y(double ys) const { return y_mean + y_std * ys; }
};

struct FittedModel {
  ModelKind kind = ModelKind::GP;
  Hyperparameters hypers;  // in standardized input space
  Eigen::VectorXd beta;    // standardized response units
  double sigma2 = 0.0;     // standardized response units
  double objective = 0.0;  // converged L
  Standardizer standardizer;
  MixedDataset train;  // original units

  // Cached factorization pieces for prediction (standardized space).
  Eigen::MatrixXd chol;       // lower-triangular factor of R_delta (+ floor)
  Eigen::MatrixXd F;          // n x h mean basis (constant: ones)
  Eigen::VectorXd alpha;      // R_delta^{-1} (y_s - F beta)
  Eigen::MatrixXd RinvF;      // R_delta^{-1} F
  Eigen::MatrixXd FtRinvF_L;  // Cholesky factor of F' R_delta^{-1} F
  Eigen::MatrixXd Xs;         // n x dim standardized training inputs
  Eigen::MatrixXd Zs;         // n x (total d_z) training latent coordinates

  PredictivePoint predict(const MixedSample& w) const;
  std::vector<PredictivePoint> predict_batch(const std::vector<MixedSample>& ws) const;

  // Posterior covariance between responses at two points, original units.
  double predict_cov(const MixedSample& a, const MixedSample& b) const;

  // delta * sigma2_hat in original response units.
  double noise_variance() const { return hypers.delta * sigma2 * standardizer.y_std * standardizer.y_std; }

 private:
  // Correlation vector against the training set and basis row, standardized.
  void corr_vector(const MixedSample& w, Eigen::VectorXd& g, Eigen::VectorXd& f) const;
};

// Canonicalized latent positions for every full level combination of the
// model's schema. Rows ordered by combo_row; labels via combo_label.
struct LatentTable {
  std::vector<std::string> labels;
  Eigen::MatrixXd Z;  // b_t x d_z
};
LatentTable latent_positions(const FittedModel& model);

// Likelihood + gradient engine over a fixed dataset, reused across optimizer
// evaluations. Works in the coordinates of the dataset handed to it (the fit
// layer standardizes first). The categorical kernel is expressed as one or
// more "latent blocks": LMGP contributes a single block (prior rows x A),
// LVGP one block per variable (one-hot selector x per-variable points).
class LikelihoodEngine {
 public:
  LikelihoodEngine(const MixedDataset& data, ModelKind kind,
                   std::shared_ptr<const PriorEncoder> encoder, int d_z);

  int n() const { return static_cast<int>(X_.rows()); }
  int dim_x() const { return static_cast<int>(X_.cols()); }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  int block_width(int b) const { return static_cast<int>(blocks_[b].cols()); }
  int d_z() const { return d_z_; }
  ModelKind kind() const { return kind_; }
  std::shared_ptr<const PriorEncoder> encoder() const { return encoder_; }

  // L at (omega, A-blocks, delta); +inf when Cholesky fails.
  double value(const Eigen::VectorXd& omega, const std::vector<Eigen::MatrixXd>& A,
               double delta);

  // As value(), also filling the analytic gradient: d L/d omega,
  // d L/d A_b entries, and d L/d log10(delta). Gradient outputs are
  // untouched when the value is +inf.
  double value_grad(const Eigen::VectorXd& omega, const std::vector<Eigen::MatrixXd>& A,
                    double delta, Eigen::VectorXd& grad_omega,
                    std::vector<Eigen::MatrixXd>& grad_A, double& grad_log10_delta);

  // Profile estimates at the last successful evaluation.
  double last_sigma2() const { return sigma2_; }
  const Eigen::VectorXd& last_beta() const { return beta_; }

  // Assemble the prediction caches of a FittedModel from hyperparameters
  // (same coordinates as the engine's dataset).
  void finalize(const Hyperparameters& hypers, FittedModel& model);

 private:
  double factorize(const Eigen::VectorXd& omega, const std::vector<Eigen::MatrixXd>& A,
                   double delta);

  ModelKind kind_;
  std::shared_ptr<const PriorEncoder> encoder_;
  int d_z_;
  Eigen::MatrixXd X_;                   // n x d_x
  Eigen::VectorXd y_;                   // n
  Eigen::MatrixXd F_;                   // n x 1 constant basis
  std::vector<Eigen::MatrixXd> Dxs_;    // per-dimension squared distances
  std::vector<Eigen::MatrixXd> blocks_; // per-block selector matrices (n x p_b)

  // Workspaces persisting across evaluations.
  Eigen::MatrixXd R_, Rd_;
  std::vector<Eigen::MatrixXd> Zs_;  // per-block latent coordinates (n x d_z)
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd resid_, alphav_, beta_;
  double sigma2_ = 0.0, logdet_ = 0.0;
  Eigen::MatrixXd Rinv_, G_;
};

}  // namespace lmgp
