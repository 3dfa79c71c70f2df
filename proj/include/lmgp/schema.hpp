#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace lmgp {

// Level indices are 1-based (1..m_i). kLevelNaN marks a variable that is not
// an input for this sample (variable-length data); only valid when the
// schema permits it for that variable.
inline constexpr int kLevelNaN = 0;

struct CategoricalVariable {
  std::string name;
  std::vector<std::string> levels;  // labels, declaration order; size = m_i
  bool nan_allowed = false;
};

class CategoricalSchema {
 public:
  CategoricalSchema() = default;
  explicit CategoricalSchema(std::vector<CategoricalVariable> vars);

  std::size_t count() const { return vars_.size(); }  // d_t
  bool empty() const { return vars_.empty(); }
  const CategoricalVariable& variable(std::size_t i) const { return vars_[i]; }
  int levels(std::size_t i) const { return static_cast<int>(vars_[i].levels.size()); }

  // Sum of m_i over variables (width of grouped one-hot priors).
  int total_levels() const;
  // Number of full (non-NaN) level combinations, b_t = prod m_i.
  long combo_count() const;

  // Row of the combination in mixed-radix order, first variable slowest.
  // Combos containing kLevelNaN are not enumerable here.
  long combo_row(const std::vector<int>& combo) const;
  std::vector<int> combo_from_row(long row) const;

  // Throws std::invalid_argument on out-of-range levels or NaN where not allowed.
  void validate_combo(const std::vector<int>& combo) const;

  // Slash-joined level labels; NaN rendered literally.
  std::string combo_label(const std::vector<int>& combo) const;

  bool operator==(const CategoricalSchema& other) const;

 private:
  std::vector<CategoricalVariable> vars_;
};

// Convenience for tests and benchmark definitions: variables named t1..tk
// with unlabeled levels "1".."m".
CategoricalSchema make_schema(const std::vector<int>& level_counts);

struct MixedSample {
  Eigen::VectorXd x;   // d_x quantitative inputs, problem units
  std::vector<int> t;  // d_t level indices, kLevelNaN where permitted
};

struct MixedDataset {
  CategoricalSchema schema;
  std::vector<MixedSample> samples;
  Eigen::VectorXd y;

  // Declared ranges of the quantitative inputs, used for [0,1] scaling when
  // fitting. Empty vectors mean "derive from the data".
  Eigen::VectorXd x_lo, x_hi;

  std::size_t size() const { return samples.size(); }
  std::size_t dim_x() const { return samples.empty() ? x_lo.size() : samples.front().x.size(); }
  std::size_t dim_t() const { return schema.count(); }

  // Enforces the structural invariants (sizes, level validity, n >= 2 when
  // responses are present). Duplicate (x, t) rows are allowed; the fit
  // requires a positive nugget to handle them.
  void validate() const;
};

}  // namespace lmgp
