#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

namespace lmgp {

namespace detail {
extern const int kSobolMaxDim;
extern const int kSobolMaxDegree;
extern const unsigned kSobolPoly[];
extern const unsigned kSobolVinit[][7];
}  // namespace detail

// 32-bit Sobol sequence generator in Gray-code order. The first element of
// the raw sequence is the all-zeros point; it is skipped by default (skip
// counts points consumed after that zero point).
class SobolSampler {
 public:
  explicit SobolSampler(int dimension, std::uint64_t skip = 0, bool include_zero_point = false);

  int dimension() const { return d_; }

  // Next point, each coordinate in [0, 1).
  Eigen::VectorXd next();

  // n further points as rows.
  Eigen::MatrixXd sample(Eigen::Index n);

 private:
  void advance();

  int d_;
  std::uint64_t index_ = 0;  // raw sequence steps taken past the zero point
  bool pending_zero_ = false;
  std::vector<std::array<std::uint32_t, 32>> v_;  // per-dimension direction numbers
  std::vector<std::uint32_t> state_;
};

// First n points of the d-dimensional sequence after skipping `skip` points
// past the zero point.
Eigen::MatrixXd sobol_points(int d, Eigen::Index n, std::uint64_t skip = 0);

}  // namespace lmgp
