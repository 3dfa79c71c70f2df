#include "lmgp/gp.hpp"

#include <lapacke.h>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lmgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLn10 = std::log(10.0);

Eigen::VectorXd pow10(const Eigen::VectorXd& w) {
  return w.unaryExpr([](double v) { return std::pow(10.0, v); });
}

}  // namespace

double gaussian_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                            const Eigen::VectorXd& omega) {
  if (x.size() != x2.size() || x.size() != omega.size())
    throw std::invalid_argument("gaussian_correlation: dimension mismatch");
  double e = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = x[i] - x2[i];
    e += std::pow(10.0, omega[i]) * d * d;
  }
  return std::exp(-e);
}

double mixed_correlation(const MixedSample& w, const MixedSample& w2,
                         const Hyperparameters& hypers) {
  if (w.x.size() != w2.x.size() || w.x.size() != hypers.omega.size())
    throw std::invalid_argument("mixed_correlation: quantitative dimension mismatch");
  double e = 0.0;
  for (Eigen::Index i = 0; i < w.x.size(); ++i) {
    const double d = w.x[i] - w2.x[i];
    e += std::pow(10.0, hypers.omega[i]) * d * d;
  }
  if (hypers.map.kind != LatentMap::Kind::None) {
    e += (hypers.map.latent(w.t) - hypers.map.latent(w2.t)).squaredNorm();
  }
  return std::exp(-e);
}

Eigen::MatrixXd build_correlation_matrix(const MixedDataset& data,
                                         const Hyperparameters& hypers) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    R(i, i) = 1.0 + hypers.delta;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double c = mixed_correlation(data.samples[i], data.samples[j], hypers);
      R(i, j) = c;
      R(j, i) = c;
    }
  }
  return R;
}

Eigen::VectorXd profile_beta(const Eigen::MatrixXd& R_delta, const Eigen::MatrixXd& F,
                             const Eigen::VectorXd& y) {
  Eigen::LLT<Eigen::MatrixXd> llt(R_delta);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("profile_beta: correlation matrix is not positive definite");
  Eigen::MatrixXd Fw = F;
  llt.matrixL().solveInPlace(Fw);  // L^{-1} F
  Eigen::VectorXd yw = y;
  llt.matrixL().solveInPlace(yw);
  const Eigen::MatrixXd FtRF = Fw.transpose() * Fw;
  Eigen::LLT<Eigen::MatrixXd> small(FtRF);
  if (small.info() != Eigen::Success)
    throw std::runtime_error("profile_beta: F' R^{-1} F is singular");
  return small.solve(Fw.transpose() * yw);
}

double profile_sigma2(const Eigen::MatrixXd& R_delta, const Eigen::MatrixXd& F,
                      const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  Eigen::LLT<Eigen::MatrixXd> llt(R_delta);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("profile_sigma2: correlation matrix is not positive definite");
  Eigen::VectorXd r = y - F * beta;
  llt.matrixL().solveInPlace(r);
  const double s2 = r.squaredNorm() / static_cast<double>(y.size());
  return s2 > 0.0 ? s2 : 1e-300;
}

double neg_log_profile_likelihood(const Hyperparameters& hypers, const MixedDataset& data) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd Rd = build_correlation_matrix(data, hypers);
  Rd.diagonal().array() += kDiagFloor;
  Eigen::LLT<Eigen::MatrixXd> llt(Rd);
  if (llt.info() != Eigen::Success) return kInf;
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(llt.matrixL()(i, i));
  logdet *= 2.0;

  const Eigen::MatrixXd F = Eigen::MatrixXd::Ones(n, 1);
  Eigen::MatrixXd Fw = F;
  llt.matrixL().solveInPlace(Fw);
  Eigen::VectorXd yw = data.y;
  llt.matrixL().solveInPlace(yw);
  const double ftf = Fw.col(0).squaredNorm();
  if (ftf <= 0.0) return kInf;
  const double beta = Fw.col(0).dot(yw) / ftf;
  const double s2 =
      std::max((yw - Fw.col(0) * beta).squaredNorm() / static_cast<double>(n), 1e-300);
  return static_cast<double>(n) * std::log(s2) + logdet;
}

Standardizer Standardizer::fit(const MixedDataset& data) {
  Standardizer s;
  const Eigen::Index dx = static_cast<Eigen::Index>(data.dim_x());
  if (data.x_lo.size() == dx && dx > 0) {
    s.x_lo = data.x_lo;
    s.x_hi = data.x_hi;
  } else {
    s.x_lo = Eigen::VectorXd::Constant(dx, std::numeric_limits<double>::max());
    s.x_hi = Eigen::VectorXd::Constant(dx, std::numeric_limits<double>::lowest());
    for (const auto& sample : data.samples) {
      s.x_lo = s.x_lo.cwiseMin(sample.x);
      s.x_hi = s.x_hi.cwiseMax(sample.x);
    }
    for (Eigen::Index j = 0; j < dx; ++j)
      if (!(s.x_lo[j] < s.x_hi[j])) s.x_hi[j] = s.x_lo[j] + 1.0;  // constant column
  }
  if (data.y.size() >= 2) {
    s.y_mean = data.y.mean();
    const double ss = (data.y.array() - s.y_mean).square().sum();
    s.y_std = std::sqrt(ss / static_cast<double>(data.y.size() - 1));
    if (!(s.y_std > 0.0)) s.y_std = 1.0;
  }
  return s;
}

Eigen::VectorXd Standardizer::scale_x(const Eigen::VectorXd& x) const {
  return (x - x_lo).cwiseQuotient(x_hi - x_lo);
}

// ---------------------------------------------------------------------------
// LikelihoodEngine

LikelihoodEngine::LikelihoodEngine(const MixedDataset& data, ModelKind kind,
                                   std::shared_ptr<const PriorEncoder> encoder, int d_z)
    : kind_(kind), encoder_(std::move(encoder)), d_z_(d_z) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index dx = static_cast<Eigen::Index>(data.dim_x());
  const Eigen::Index dt = static_cast<Eigen::Index>(data.dim_t());

  X_.resize(n, dx);
  for (Eigen::Index i = 0; i < n; ++i) X_.row(i) = data.samples[i].x;
  y_ = data.y;
  F_ = Eigen::MatrixXd::Ones(n, 1);

  Dxs_.reserve(dx);
  for (Eigen::Index j = 0; j < dx; ++j) {
    const Eigen::VectorXd c = X_.col(j);
    Eigen::MatrixXd D = c.replicate(1, n) - c.transpose().replicate(n, 1);
    Dxs_.push_back(D.cwiseProduct(D));
  }

  if (kind_ == ModelKind::LMGP) {
    if (!encoder_) throw std::invalid_argument("LMGP engine requires a prior encoder");
    Eigen::MatrixXd zeta(n, encoder_->width());
    for (Eigen::Index i = 0; i < n; ++i) zeta.row(i) = encoder_->row(data.samples[i].t);
    blocks_.push_back(std::move(zeta));
  } else if (kind_ == ModelKind::LVGP) {
    for (Eigen::Index v = 0; v < dt; ++v) {
      const int m = data.schema.levels(v);
      Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, m);
      for (Eigen::Index i = 0; i < n; ++i) {
        const int level = data.samples[i].t[v];
        if (level == kLevelNaN)
          throw std::invalid_argument("LVGP does not support NaN levels");
        onehot(i, level - 1) = 1.0;
      }
      blocks_.push_back(std::move(onehot));
    }
  }
}

double LikelihoodEngine::factorize(const Eigen::VectorXd& omega,
                                   const std::vector<Eigen::MatrixXd>& A, double delta) {
  const Eigen::Index n = X_.rows();
  if (omega.size() != X_.cols()) throw std::invalid_argument("omega dimension mismatch");
  if (A.size() != blocks_.size()) throw std::invalid_argument("latent block count mismatch");

  R_.setZero(n, n);
  const Eigen::VectorXd w10 = pow10(omega);
  for (std::size_t j = 0; j < Dxs_.size(); ++j) R_ += w10[j] * Dxs_[j];
  Zs_.resize(blocks_.size());
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    Zs_[b].noalias() = blocks_[b] * A[b];
    const Eigen::VectorXd rsq = Zs_[b].rowwise().squaredNorm();
    R_.noalias() -= 2.0 * Zs_[b] * Zs_[b].transpose();
    R_.colwise() += rsq;
    R_.rowwise() += rsq.transpose();
  }
  R_ = (-R_.array()).exp();
  R_.diagonal().setOnes();

  Rd_ = R_;
  Rd_.diagonal().array() += delta + kDiagFloor;
  llt_.compute(Rd_);
  if (llt_.info() != Eigen::Success) return kInf;

  logdet_ = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet_ += std::log(llt_.matrixL()(i, i));
  logdet_ *= 2.0;

  Eigen::MatrixXd Fw = F_;
  llt_.matrixL().solveInPlace(Fw);
  Eigen::VectorXd yw = y_;
  llt_.matrixL().solveInPlace(yw);
  const Eigen::MatrixXd FtRF = Fw.transpose() * Fw;
  Eigen::LLT<Eigen::MatrixXd> small(FtRF);
  if (small.info() != Eigen::Success) return kInf;
  beta_ = small.solve(Fw.transpose() * yw);

  resid_ = y_ - F_ * beta_;
  alphav_ = llt_.solve(resid_);
  sigma2_ = std::max(resid_.dot(alphav_) / static_cast<double>(n), 1e-300);
  return static_cast<double>(n) * std::log(sigma2_) + logdet_;
}

double LikelihoodEngine::value(const Eigen::VectorXd& omega,
                               const std::vector<Eigen::MatrixXd>& A, double delta) {
  return factorize(omega, A, delta);
}

double LikelihoodEngine::value_grad(const Eigen::VectorXd& omega,
                                    const std::vector<Eigen::MatrixXd>& A, double delta,
                                    Eigen::VectorXd& grad_omega,
                                    std::vector<Eigen::MatrixXd>& grad_A,
                                    double& grad_log10_delta) {
  const double L = factorize(omega, A, delta);
  if (!std::isfinite(L)) return L;
  const Eigen::Index n = X_.rows();

  // M = R_delta^{-1} - alpha alpha' / sigma2; dL/dtheta = trace(M dR/dtheta).
  // dpotri inverts in roughly half the time of two full triangular solves.
  Rinv_ = llt_.matrixL();
  LAPACKE_dpotri(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(n), Rinv_.data(),
                 static_cast<lapack_int>(n));
  Rinv_.triangularView<Eigen::StrictlyUpper>() =
      Rinv_.transpose().triangularView<Eigen::StrictlyUpper>();
  Rinv_.noalias() -= (alphav_ / sigma2_) * alphav_.transpose();

  grad_log10_delta = kLn10 * delta * Rinv_.trace();

  G_ = Rinv_.cwiseProduct(R_);

  grad_omega.resize(omega.size());
  for (Eigen::Index j = 0; j < omega.size(); ++j)
    grad_omega[j] = -kLn10 * std::pow(10.0, omega[j]) * G_.cwiseProduct(Dxs_[j]).sum();

  grad_A.resize(blocks_.size());
  if (!blocks_.empty()) {
    const Eigen::VectorXd g = G_.rowwise().sum();
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      Eigen::MatrixXd DZ = Zs_[b].array().colwise() * g.array();
      DZ.noalias() -= G_ * Zs_[b];
      grad_A[b].noalias() = -4.0 * blocks_[b].transpose() * DZ;
    }
  }
  return L;
}

void LikelihoodEngine::finalize(const Hyperparameters& hypers, FittedModel& model) {
  std::vector<Eigen::MatrixXd> A;
  if (kind_ == ModelKind::LMGP)
    A.push_back(hypers.map.A);
  else if (kind_ == ModelKind::LVGP)
    A = hypers.map.points;
  const double L = factorize(hypers.omega, A, hypers.delta);
  if (!std::isfinite(L)) throw std::runtime_error("finalize: Cholesky failed at the optimum");

  model.kind = kind_;
  model.hypers = hypers;
  model.beta = beta_;
  model.sigma2 = sigma2_;
  model.objective = L;
  model.chol = llt_.matrixL();
  model.F = F_;
  model.alpha = alphav_;
  model.RinvF = llt_.solve(F_);
  Eigen::LLT<Eigen::MatrixXd> small(Eigen::MatrixXd(F_.transpose() * model.RinvF));
  model.FtRinvF_L = small.matrixL();
  model.Xs = X_;
  if (blocks_.empty()) {
    model.Zs.resize(X_.rows(), 0);
  } else {
    Eigen::Index cols = 0;
    for (const auto& Z : Zs_) cols += Z.cols();
    model.Zs.resize(X_.rows(), cols);
    Eigen::Index at = 0;
    for (const auto& Z : Zs_) {
      model.Zs.middleCols(at, Z.cols()) = Z;
      at += Z.cols();
    }
  }
}

// ---------------------------------------------------------------------------
// FittedModel

void FittedModel::corr_vector(const MixedSample& w, Eigen::VectorXd& g,
                              Eigen::VectorXd& f) const {
  train.schema.validate_combo(w.t);
  Eigen::VectorXd xfull = w.x;
  if (kind == ModelKind::GP && !w.t.empty()) {
    // Numeric-level view: levels participate as ordinary coordinates.
    xfull.conservativeResize(w.x.size() + static_cast<Eigen::Index>(w.t.size()));
    for (std::size_t i = 0; i < w.t.size(); ++i) {
      if (w.t[i] == kLevelNaN)
        throw std::invalid_argument("numeric-level GP does not support NaN levels");
      xfull[w.x.size() + static_cast<Eigen::Index>(i)] = static_cast<double>(w.t[i]);
    }
  }
  const Eigen::VectorXd xs = standardizer.scale_x(xfull);

  const Eigen::Index n = Xs.rows();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd w10 = pow10(hypers.omega);
  for (Eigen::Index j = 0; j < Xs.cols(); ++j)
    e += w10[j] * (Xs.col(j).array() - xs[j]).square().matrix();
  if (hypers.map.kind != LatentMap::Kind::None) {
    const Eigen::VectorXd zstar = hypers.map.latent(w.t);
    e += (Zs.rowwise() - zstar.transpose()).rowwise().squaredNorm();
  }
  g = (-e.array()).exp();
  f = Eigen::VectorXd::Ones(1);
}

PredictivePoint FittedModel::predict(const MixedSample& w) const {
  Eigen::VectorXd g, f;
  corr_vector(w, g, f);

  const double mean_s = f.dot(beta) + g.dot(alpha);

  Eigen::VectorXd a = g;
  chol.triangularView<Eigen::Lower>().solveInPlace(a);
  Eigen::VectorXd h = f - RinvF.transpose() * g;
  Eigen::VectorXd hw = h;
  FtRinvF_L.triangularView<Eigen::Lower>().solveInPlace(hw);
  double var_s = sigma2 * (1.0 - a.squaredNorm() + hw.squaredNorm());
  if (var_s < 0.0) var_s = 0.0;

  const double ys2 = standardizer.y_std * standardizer.y_std;
  return {standardizer.unscale_y(mean_s), var_s * ys2};
}

std::vector<PredictivePoint> FittedModel::predict_batch(
    const std::vector<MixedSample>& ws) const {
  std::vector<PredictivePoint> out;
  out.reserve(ws.size());
  for (const auto& w : ws) out.push_back(predict(w));
  return out;
}

double FittedModel::predict_cov(const MixedSample& wa, const MixedSample& wb) const {
  Eigen::VectorXd ga, fa, gb, fb;
  corr_vector(wa, ga, fa);
  corr_vector(wb, gb, fb);

  // Correlation between the two points themselves, standardized coordinates.
  Eigen::VectorXd xa = wa.x, xb = wb.x;
  if (kind == ModelKind::GP && !wa.t.empty()) {
    xa.conservativeResize(wa.x.size() + static_cast<Eigen::Index>(wa.t.size()));
    xb.conservativeResize(wb.x.size() + static_cast<Eigen::Index>(wb.t.size()));
    for (std::size_t i = 0; i < wa.t.size(); ++i) {
      xa[wa.x.size() + static_cast<Eigen::Index>(i)] = static_cast<double>(wa.t[i]);
      xb[wb.x.size() + static_cast<Eigen::Index>(i)] = static_cast<double>(wb.t[i]);
    }
  }
  double e = (pow10(hypers.omega).array() *
              (standardizer.scale_x(xa) - standardizer.scale_x(xb)).array().square())
                 .sum();
  if (hypers.map.kind != LatentMap::Kind::None)
    e += (hypers.map.latent(wa.t) - hypers.map.latent(wb.t)).squaredNorm();
  const double c = std::exp(-e);

  Eigen::VectorXd aa = ga, ab = gb;
  chol.triangularView<Eigen::Lower>().solveInPlace(aa);
  chol.triangularView<Eigen::Lower>().solveInPlace(ab);
  Eigen::VectorXd ha = fa - RinvF.transpose() * ga;
  Eigen::VectorXd hb = fb - RinvF.transpose() * gb;
  FtRinvF_L.triangularView<Eigen::Lower>().solveInPlace(ha);
  FtRinvF_L.triangularView<Eigen::Lower>().solveInPlace(hb);

  const double ys2 = standardizer.y_std * standardizer.y_std;
  return sigma2 * (c - aa.dot(ab) + ha.dot(hb)) * ys2;
}

LatentTable latent_positions(const FittedModel& model) {
  const auto& map = model.hypers.map;
  if (map.kind == LatentMap::Kind::None)
    throw std::logic_error("latent positions are undefined for a pure-numeric model");
  if (map.d_z != 2)
    throw std::logic_error("latent export requires d_z = 2");

  LatentTable table;
  const auto& schema = model.train.schema;
  if (map.kind == LatentMap::Kind::LMGP) {
    const long b = schema.combo_count();
    table.Z.resize(b, 2);
    table.labels.reserve(b);
    for (long r = 0; r < b; ++r) {
      const auto combo = schema.combo_from_row(r);
      table.Z.row(r) = map.latent(combo).transpose();
      table.labels.push_back(schema.combo_label(combo));
    }
    table.Z = canonicalize_latent(table.Z);
  } else {
    // LVGP: per-variable point sets, each canonicalized independently.
    table.Z.resize(schema.total_levels(), 2);
    Eigen::Index at = 0;
    for (std::size_t v = 0; v < schema.count(); ++v) {
      const Eigen::MatrixXd Zv = canonicalize_latent(map.points[v]);
      for (int level = 1; level <= schema.levels(v); ++level) {
        table.Z.row(at++) = Zv.row(level - 1);
        table.labels.push_back(schema.variable(v).name + "/" +
                               schema.variable(v).levels[level - 1]);
      }
    }
  }
  return table;
}

}  // namespace lmgp
