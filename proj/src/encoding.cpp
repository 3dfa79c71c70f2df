#include "lmgp/encoding.hpp"

#include <cmath>
#include <stdexcept>

#include "lmgp/rng.hpp"

namespace lmgp {

PriorEncoder::PriorEncoder(CategoricalSchema schema, PriorStrategy strategy,
                           std::uint64_t seed, NanFill nan_fill, int random_width)
    : schema_(std::move(schema)), strategy_(strategy), seed_(seed), nan_fill_(nan_fill) {
  switch (strategy_) {
    case PriorStrategy::OneHotGrouped:
      width_ = schema_.total_levels();
      break;
    case PriorStrategy::Random:
      width_ = random_width > 0 ? random_width : schema_.total_levels();
      break;
    case PriorStrategy::Lumped:
      width_ = static_cast<int>(schema_.combo_count());
      break;
  }
}

namespace {

// Stable stream id for a combo so that random draws are order-independent.
std::uint64_t combo_stream(const std::vector<int>& combo, std::uint64_t salt) {
  return fnv1a64(combo.data(), combo.size(), 0xcbf29ce484222325ULL ^ salt);
}

}  // namespace

Eigen::RowVectorXd PriorEncoder::row(const std::vector<int>& combo) const {
  schema_.validate_combo(combo);
  Eigen::RowVectorXd zeta = Eigen::RowVectorXd::Zero(width_);

  if (strategy_ == PriorStrategy::Random) {
    // One IID Uniform(0,1) row per distinct combination.
    Rng rng(seed_, combo_stream(combo, 0x72616e64ULL));
    for (int j = 0; j < width_; ++j) zeta[j] = rng.uniform();
    return zeta;
  }

  if (strategy_ == PriorStrategy::Lumped) {
    zeta[schema_.combo_row(combo)] = 1.0;  // throws on NaN combos
    return zeta;
  }

  // OneHotGrouped, with NaN blocks filled per nan_fill.
  int offset = 0;
  Rng rng(seed_, combo_stream(combo, 0x6e616e66ULL));  // used only when a NaN block appears
  for (std::size_t i = 0; i < schema_.count(); ++i) {
    const int m = schema_.levels(i);
    if (combo[i] == kLevelNaN) {
      if (nan_fill_ == NanFill::Random)
        for (int j = 0; j < m; ++j) zeta[offset + j] = rng.uniform();
      // Zero: block stays zero.
    } else {
      zeta[offset + combo[i] - 1] = 1.0;
    }
    offset += m;
  }
  return zeta;
}

Eigen::MatrixXd PriorEncoder::full_matrix() const {
  const long b = schema_.combo_count();
  Eigen::MatrixXd zeta(b, width_);
  for (long r = 0; r < b; ++r) zeta.row(r) = row(schema_.combo_from_row(r));
  return zeta;
}

Eigen::VectorXd map_to_latent(const Eigen::RowVectorXd& zeta_row, const Eigen::MatrixXd& A) {
  if (zeta_row.size() != A.rows()) throw std::invalid_argument("prior row / map size mismatch");
  return (zeta_row * A).transpose();
}

Eigen::MatrixXd canonicalize_latent(const Eigen::MatrixXd& Z) {
  if (Z.cols() != 2) throw std::invalid_argument("canonicalization requires d_z = 2");
  const Eigen::Index n = Z.rows();
  Eigen::MatrixXd out = Z;
  if (n == 0) return out;

  out.rowwise() -= Z.row(0);

  const double scale = out.cwiseAbs().maxCoeff();
  const double tol = 1e-12 * std::max(1.0, scale);
  if (scale == 0.0) return out;  // all rows coincident

  // Rotate the first row with nonzero radius onto the positive z1 axis.
  Eigen::Index pivot = -1;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (out.row(i).norm() > tol) {
      pivot = i;
      break;
    }
  }
  if (pivot >= 0) {
    const double r = out.row(pivot).norm();
    const double c = out(pivot, 0) / r, s = out(pivot, 1) / r;
    Eigen::Matrix2d rot;
    rot << c, s, -s, c;  // applied on the right to row vectors
    out = out * rot.transpose();
  }

  // Reflect so the first row off the z1 axis has z2 >= 0.
  for (Eigen::Index i = 1; i < n; ++i) {
    if (std::abs(out(i, 1)) > tol) {
      if (out(i, 1) < 0) out.col(1) = -out.col(1);
      break;
    }
  }
  return out;
}

Eigen::VectorXd LatentMap::latent(const std::vector<int>& t) const {
  switch (kind) {
    case Kind::None:
      return Eigen::VectorXd();
    case Kind::LMGP:
      return map_to_latent(encoder->row(t), A);
    case Kind::LVGP: {
      if (t.size() != points.size()) throw std::invalid_argument("combo length mismatch");
      Eigen::VectorXd z(static_cast<Eigen::Index>(points.size()) * d_z);
      for (std::size_t i = 0; i < points.size(); ++i) {
        const int level = t[i];
        if (level == kLevelNaN) throw std::invalid_argument("LVGP does not support NaN levels");
        if (level < 1 || level > points[i].rows())
          throw std::invalid_argument("level out of range for LVGP points");
        z.segment(static_cast<Eigen::Index>(i) * d_z, d_z) = points[i].row(level - 1);
      }
      return z;
    }
  }
  return Eigen::VectorXd();
}

Eigen::VectorXd lvgp_pack(const std::vector<Eigen::MatrixXd>& points) {
  Eigen::Index total = 0;
  for (const auto& P : points) total += lvgp_free_count(static_cast<int>(P.rows()));
  Eigen::VectorXd free(total);
  Eigen::Index k = 0;
  for (const auto& P : points) {
    free[k++] = P(1, 0);
    for (Eigen::Index r = 2; r < P.rows(); ++r) {
      free[k++] = P(r, 0);
      free[k++] = P(r, 1);
    }
  }
  return free;
}

std::vector<Eigen::MatrixXd> lvgp_unpack(const Eigen::VectorXd& free,
                                         const std::vector<int>& level_counts) {
  std::vector<Eigen::MatrixXd> points;
  points.reserve(level_counts.size());
  Eigen::Index k = 0;
  for (int m : level_counts) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m, 2);
    P(1, 0) = free[k++];
    for (int r = 2; r < m; ++r) {
      P(r, 0) = free[k++];
      P(r, 1) = free[k++];
    }
    points.push_back(std::move(P));
  }
  if (k != free.size()) throw std::invalid_argument("LVGP free-vector length mismatch");
  return points;
}

void lvgp_bounds(const std::vector<int>& level_counts, Eigen::VectorXd& lower,
                 Eigen::VectorXd& upper) {
  Eigen::Index total = 0;
  for (int m : level_counts) total += lvgp_free_count(m);
  lower.resize(total);
  upper.resize(total);
  Eigen::Index k = 0;
  for (int m : level_counts) {
    lower[k] = 0.0;  // point 2: z1 >= 0
    upper[k] = 5.0;
    ++k;
    for (int r = 2; r < m; ++r) {
      lower[k] = -5.0;
      upper[k] = 5.0;
      ++k;
      lower[k] = (r == 2) ? 0.0 : -5.0;  // point 3: z2 >= 0
      upper[k] = 5.0;
      ++k;
    }
  }
}

}  // namespace lmgp
