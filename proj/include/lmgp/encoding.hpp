#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "lmgp/schema.hpp"

namespace lmgp {

enum class PriorStrategy { OneHotGrouped, Random, Lumped };

// How to fill the prior block of a variable whose level is kLevelNaN.
enum class NanFill { Zero, Random };

// Maps level combinations to prior rows zeta(t). Rows are a pure function of
// (schema, strategy, seed, combo); NaN-bearing combos are handled per
// nan_fill, with Random fills drawn from a per-combo substream so identical
// combos always share one row regardless of encounter order.
class PriorEncoder {
 public:
  PriorEncoder(CategoricalSchema schema, PriorStrategy strategy,
               std::uint64_t seed = 0, NanFill nan_fill = NanFill::Zero,
               int random_width = -1);

  int width() const { return width_; }  // p
  const CategoricalSchema& schema() const { return schema_; }
  PriorStrategy strategy() const { return strategy_; }
  NanFill nan_fill() const { return nan_fill_; }
  std::uint64_t seed() const { return seed_; }

  Eigen::RowVectorXd row(const std::vector<int>& combo) const;

  // Dense b_t x p matrix over all full combinations, row order = combo_row.
  Eigen::MatrixXd full_matrix() const;

 private:
  CategoricalSchema schema_;
  PriorStrategy strategy_;
  std::uint64_t seed_;
  NanFill nan_fill_;
  int width_;
};

// z = zeta * A.
Eigen::VectorXd map_to_latent(const Eigen::RowVectorXd& zeta_row, const Eigen::MatrixXd& A);

// Rigid transform (translation + rotation + optional reflection) pinning
// row 1 to the origin, row 2 to the nonnegative z1 axis, and the sign of
// row 3's z2 to be nonnegative. Coincident leading rows fall through to the
// first usable row; a fully coincident cloud returns zeros.
Eigen::MatrixXd canonicalize_latent(const Eigen::MatrixXd& Z);

// Latent parameterization of the categorical inputs for a fitted kernel.
struct LatentMap {
  enum class Kind { None, LMGP, LVGP };

  Kind kind = Kind::None;
  int d_z = 2;

  // LMGP: z(t) = zeta(t) * A, A is p x d_z.
  std::shared_ptr<const PriorEncoder> encoder;
  Eigen::MatrixXd A;

  // LVGP: independent per-variable latent points, each m_i x d_z. Row 1 is
  // pinned to the origin, row 2 to (z1 >= 0, 0), row 3 to z2 >= 0.
  std::vector<Eigen::MatrixXd> points;

  // Concatenated latent coordinates for a combination: d_z entries for LMGP,
  // d_t * d_z for LVGP, empty for None. Squared latent distance in the kernel
  // is the squared Euclidean distance between these vectors.
  Eigen::VectorXd latent(const std::vector<int>& t) const;
};

// Number of free coordinates for one LVGP variable with m levels (d_z = 2
// pinning): 2m - 3.
inline int lvgp_free_count(int m) { return 2 * m - 3; }

// Pack/unpack the free coordinates of per-variable LVGP point arrays.
Eigen::VectorXd lvgp_pack(const std::vector<Eigen::MatrixXd>& points);
std::vector<Eigen::MatrixXd> lvgp_unpack(const Eigen::VectorXd& free,
                                         const std::vector<int>& level_counts);
// Per-entry bounds aligned with lvgp_pack: constrained entries [0, 5], the
// rest [-5, 5].
void lvgp_bounds(const std::vector<int>& level_counts, Eigen::VectorXd& lower,
                 Eigen::VectorXd& upper);

}  // namespace lmgp
