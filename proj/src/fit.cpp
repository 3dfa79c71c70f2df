#include "lmgp/fit.hpp"

#include <cmath>
#include <stdexcept>

#include "lmgp/rng.hpp"

namespace lmgp {

namespace {

// Appendix-style hyperparameter boxes.
constexpr double kOmegaLo = -8.0, kOmegaHi = 3.0;
constexpr double kMapLo = -1.0, kMapHi = 1.0;
constexpr double kDeltaExpLo = -10.0, kDeltaExpHi = -1.0;

}  // namespace

FitProblem::FitProblem(const MixedDataset& data, const FitConfig& cfg)
    : cfg_(cfg), original_(data) {
  original_.validate();
  const Eigen::Index n = static_cast<Eigen::Index>(original_.size());
  if (original_.y.size() != n) throw std::invalid_argument("fit requires responses");

  const Eigen::Index dx = static_cast<Eigen::Index>(original_.dim_x());
  const Eigen::Index dt = static_cast<Eigen::Index>(original_.dim_t());
  const bool numeric_levels = cfg_.kind == ModelKind::GP && dt > 0;

  // Working copy in engine coordinates. A numeric-level GP folds the level
  // indices into x; the schema stays on the original dataset for prediction.
  MixedDataset work;
  work.y.resize(n);
  work.samples.resize(n);

  standardizer_ = Standardizer::fit(original_);
  if (numeric_levels) {
    standardizer_.x_lo.conservativeResize(dx + dt);
    standardizer_.x_hi.conservativeResize(dx + dt);
    for (Eigen::Index v = 0; v < dt; ++v) {
      standardizer_.x_lo[dx + v] = 1.0;
      standardizer_.x_hi[dx + v] = std::max(2, original_.schema.levels(v));
    }
  }
  dim_x_ = dx + (numeric_levels ? dt : 0);

  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd xfull(dim_x_);
    xfull.head(dx) = original_.samples[i].x;
    if (numeric_levels) {
      for (Eigen::Index v = 0; v < dt; ++v) {
        const int level = original_.samples[i].t[v];
        if (level == kLevelNaN)
          throw std::invalid_argument("numeric-level GP does not support NaN levels");
        xfull[dx + v] = static_cast<double>(level);
      }
    }
    work.samples[i].x = standardizer_.scale_x(xfull);
    if (!numeric_levels) work.samples[i].t = original_.samples[i].t;
    work.y[i] = standardizer_.scale_y(original_.y[i]);
  }
  if (!numeric_levels) work.schema = original_.schema;

  if (cfg_.kind == ModelKind::LMGP) {
    encoder_ = std::make_shared<PriorEncoder>(original_.schema, cfg_.prior, cfg_.seed,
                                              cfg_.nan_fill, cfg_.random_width);
    latent_len_ = static_cast<Eigen::Index>(encoder_->width()) * cfg_.d_z;
  } else if (cfg_.kind == ModelKind::LVGP) {
    if (cfg_.d_z != 2) throw std::invalid_argument("LVGP parameterization requires d_z = 2");
    for (Eigen::Index v = 0; v < dt; ++v) level_counts_.push_back(original_.schema.levels(v));
    latent_len_ = 0;
    for (int m : level_counts_) latent_len_ += lvgp_free_count(m);
  }

  engine_ = std::make_unique<LikelihoodEngine>(work, cfg_.kind, encoder_, cfg_.d_z);

  const Eigen::Index dim = dim_x_ + latent_len_ + 1;
  lower_.resize(dim);
  upper_.resize(dim);
  lower_.head(dim_x_).setConstant(kOmegaLo);
  upper_.head(dim_x_).setConstant(kOmegaHi);
  if (cfg_.kind == ModelKind::LMGP) {
    lower_.segment(dim_x_, latent_len_).setConstant(kMapLo);
    upper_.segment(dim_x_, latent_len_).setConstant(kMapHi);
  } else if (cfg_.kind == ModelKind::LVGP) {
    Eigen::VectorXd lo, hi;
    lvgp_bounds(level_counts_, lo, hi);
    lower_.segment(dim_x_, latent_len_) = lo;
    upper_.segment(dim_x_, latent_len_) = hi;
  }
  lower_[dim - 1] = kDeltaExpLo;
  upper_[dim - 1] = kDeltaExpHi;
}

std::vector<Eigen::MatrixXd> FitProblem::latent_blocks(const Eigen::VectorXd& p) const {
  std::vector<Eigen::MatrixXd> blocks;
  if (cfg_.kind == ModelKind::LMGP) {
    Eigen::MatrixXd A(encoder_->width(), cfg_.d_z);
    for (Eigen::Index r = 0; r < A.rows(); ++r)
      for (Eigen::Index c = 0; c < A.cols(); ++c) A(r, c) = p[dim_x_ + r * cfg_.d_z + c];
    blocks.push_back(std::move(A));
  } else if (cfg_.kind == ModelKind::LVGP) {
    blocks = lvgp_unpack(p.segment(dim_x_, latent_len_), level_counts_);
  }
  return blocks;
}

double FitProblem::value(const Eigen::VectorXd& p) {
  return engine_->value(p.head(dim_x_), latent_blocks(p), std::pow(10.0, p[dim() - 1]));
}

double FitProblem::value_grad(const Eigen::VectorXd& p, Eigen::VectorXd& grad) {
  Eigen::VectorXd grad_omega;
  std::vector<Eigen::MatrixXd> grad_A;
  double grad_dexp = 0.0;
  const double L = engine_->value_grad(p.head(dim_x_), latent_blocks(p),
                                       std::pow(10.0, p[dim() - 1]), grad_omega, grad_A,
                                       grad_dexp);
  if (!std::isfinite(L)) return L;
  grad.resize(dim());
  grad.head(dim_x_) = grad_omega;
  if (cfg_.kind == ModelKind::LMGP) {
    const auto& GA = grad_A[0];
    for (Eigen::Index r = 0; r < GA.rows(); ++r)
      for (Eigen::Index c = 0; c < GA.cols(); ++c) grad[dim_x_ + r * cfg_.d_z + c] = GA(r, c);
  } else if (cfg_.kind == ModelKind::LVGP) {
    grad.segment(dim_x_, latent_len_) = lvgp_pack(grad_A);
  }
  grad[dim() - 1] = grad_dexp;
  return L;
}

Objective FitProblem::objective() {
  return {[this](const Eigen::VectorXd& p) { return value(p); },
          [this](const Eigen::VectorXd& p, Eigen::VectorXd& g) { return value_grad(p, g); }};
}

Hyperparameters FitProblem::unpack(const Eigen::VectorXd& p) const {
  Hyperparameters h;
  h.omega = p.head(dim_x_);
  h.delta = std::pow(10.0, p[dim() - 1]);
  if (cfg_.kind == ModelKind::LMGP) {
    h.map.kind = LatentMap::Kind::LMGP;
    h.map.d_z = cfg_.d_z;
    h.map.encoder = encoder_;
    h.map.A = latent_blocks(p)[0];
  } else if (cfg_.kind == ModelKind::LVGP) {
    h.map.kind = LatentMap::Kind::LVGP;
    h.map.d_z = cfg_.d_z;
    h.map.points = latent_blocks(p);
  }
  return h;
}

Eigen::VectorXd FitProblem::pack(const Hyperparameters& hypers) const {
  Eigen::VectorXd p(dim());
  p.head(dim_x_) = hypers.omega;
  if (cfg_.kind == ModelKind::LMGP) {
    for (Eigen::Index r = 0; r < hypers.map.A.rows(); ++r)
      for (Eigen::Index c = 0; c < hypers.map.A.cols(); ++c)
        p[dim_x_ + r * cfg_.d_z + c] = hypers.map.A(r, c);
  } else if (cfg_.kind == ModelKind::LVGP) {
    p.segment(dim_x_, latent_len_) = lvgp_pack(hypers.map.points);
  }
  p[dim() - 1] = std::log10(hypers.delta);
  return p;
}

Eigen::VectorXd FitProblem::center_start() const {
  Rng rng(cfg_.seed, 0x5741524dULL);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(dim());
  for (Eigen::Index j = dim_x_; j < dim_x_ + latent_len_; ++j) p[j] = rng.uniform(-0.1, 0.1);
  p[dim() - 1] = -4.0;
  return p;
}

FittedModel FitProblem::finalize(const Eigen::VectorXd& p) {
  FittedModel model;
  engine_->finalize(unpack(p), model);
  model.standardizer = standardizer_;
  model.train = original_;
  return model;
}

Eigen::VectorXd likelihood_gradient(FitProblem& problem, const Eigen::VectorXd& p) {
  Eigen::VectorXd grad;
  const double L = problem.value_grad(p, grad);
  if (!std::isfinite(L)) throw std::runtime_error("gradient unavailable: factorization failed");
  return grad;
}

FittedModel fit_with_continuation(const MixedDataset& data, const FitConfig& cfg,
                                  OptimizationReport* report_out, const Hyperparameters* warm) {
  FitProblem problem(data, cfg);
  Objective obj = problem.objective();
  const Eigen::Index dim = problem.dim();

  std::vector<Eigen::VectorXd> fixed = {problem.center_start()};
  if (warm) {
    Eigen::VectorXd w = problem.pack(*warm);
    fixed.insert(fixed.begin(),
                 w.cwiseMax(problem.lower()).cwiseMin(problem.upper()));
  }
  OptimizationReport report = minimize_multistart(obj, problem.lower(), problem.upper(),
                                                  cfg.n_starts, cfg.seed, cfg.lbfgs, fixed);

  // Incumbent selection with the nugget tie rule: within 1e-9 in L prefer
  // the smaller delta (last packed coordinate).
  auto better = [dim](const StartResult& cand, const StartResult& best) {
    if (cand.termination == "infeasible-start") return false;
    if (best.termination == "infeasible-start") return true;
    if (cand.f < best.f - 1e-9) return true;
    if (cand.f <= best.f + 1e-9 && cand.x[dim - 1] < best.x[dim - 1]) return true;
    return false;
  };
  int best = 0;
  for (std::size_t i = 1; i < report.starts.size(); ++i)
    if (better(report.starts[i], report.starts[best])) best = static_cast<int>(i);
  if (report.starts[best].termination == "infeasible-start")
    throw std::runtime_error("fit failed: all starts infeasible");

  if (cfg.continuation) {
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::VectorXd warm = report.starts[best].x;
      warm[dim - 1] = pass == 0 ? -1.0 : std::max(-10.0, warm[dim - 1] - 1.0);
      report.starts.push_back(minimize_lbfgs(obj, warm, problem.lower(), problem.upper(),
                                             cfg.lbfgs));
      if (better(report.starts.back(), report.starts[best]))
        best = static_cast<int>(report.starts.size()) - 1;
    }
  }

  report.best_x = report.starts[best].x;
  report.best_f = report.starts[best].f;
  if (report_out) *report_out = report;
  return problem.finalize(report.best_x);
}

}  // namespace lmgp
