#include "lmgp/sobol.hpp"

#include <bit>
#include <stdexcept>

namespace lmgp {

SobolSampler::SobolSampler(int dimension, std::uint64_t skip, bool include_zero_point)
    : d_(dimension) {
  if (d_ < 1 || d_ > detail::kSobolMaxDim)
    throw std::invalid_argument("Sobol dimension must be in [1, " +
                                std::to_string(detail::kSobolMaxDim) + "]");
  v_.resize(d_);
  for (int k = 0; k < 32; ++k) v_[0][k] = 1u << (31 - k);
  for (int j = 1; j < d_; ++j) {
    const unsigned p = detail::kSobolPoly[j - 1];
    const int s = std::bit_width(p) - 1;
    const unsigned a = (p - (1u << s) - 1u) >> 1;
    std::uint32_t m[33];
    for (int i = 1; i <= s; ++i) m[i] = detail::kSobolVinit[j - 1][i - 1];
    for (int i = s + 1; i <= 32; ++i) {
      m[i] = m[i - s] ^ (m[i - s] << s);
      for (int k = 1; k < s; ++k)
        m[i] ^= (((a >> (s - 1 - k)) & 1u) * m[i - k]) << k;
    }
    for (int k = 1; k <= 32; ++k) v_[j][k - 1] = m[k] << (32 - k);
  }
  state_.assign(d_, 0);
  pending_zero_ = include_zero_point;
  for (std::uint64_t i = 0; i < skip; ++i) advance();
}

void SobolSampler::advance() {
  ++index_;
  const int c = std::countr_zero(index_);
  if (c >= 32) throw std::overflow_error("Sobol sequence exhausted (2^32 points)");
  for (int j = 0; j < d_; ++j) state_[j] ^= v_[j][c];
}

Eigen::VectorXd SobolSampler::next() {
  Eigen::VectorXd x(d_);
  if (pending_zero_) {
    pending_zero_ = false;
    x.setZero();
    return x;
  }
  advance();
  for (int j = 0; j < d_; ++j) x[j] = static_cast<double>(state_[j]) * 0x1.0p-32;
  return x;
}

Eigen::MatrixXd SobolSampler::sample(Eigen::Index n) {
  Eigen::MatrixXd out(n, d_);
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = next().transpose();
  return out;
}

Eigen::MatrixXd sobol_points(int d, Eigen::Index n, std::uint64_t skip) {
  return SobolSampler(d, skip).sample(n);
}

}  // namespace lmgp
