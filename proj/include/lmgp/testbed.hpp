#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lmgp/schema.hpp"

namespace lmgp {

// Analytic mixed-variable benchmark. Categorical variables substitute the
// underlying level values before evaluation; a kLevelNaN level substitutes
// the dedicated hidden value (functions 1 and 3 only).
struct BenchmarkFunction {
  int id = 0;
  std::string name;
  std::vector<std::string> x_names;
  Eigen::VectorXd x_lo, x_hi;
  CategoricalSchema schema;
  std::vector<std::vector<double>> level_values;  // per categorical variable
  std::vector<double> nan_values;                 // hidden NaN substitutions (may be empty)

  int dim_x() const { return static_cast<int>(x_lo.size()); }
  int dim_t() const { return static_cast<int>(schema.count()); }

  // Core formula over fully numeric inputs [x; underlying categorical values].
  double evaluate_numeric(const Eigen::VectorXd& full) const;

  // Level lookup + evaluate_numeric. Throws on out-of-range numeric inputs.
  double evaluate(const MixedSample& w) const;

  // Underlying value ranges of the categorical variables (min/max level value).
  void categorical_value_ranges(Eigen::VectorXd& lo, Eigen::VectorXd& hi) const;
};

// Registered functions, id in 1..6.
const BenchmarkFunction& benchmark(int id);

double eval_function(int id, const MixedSample& w);
double level_value(int id, const std::string& variable, int level);

// Underlying-value ratio L/K_w for the borehole levels, rounded to 3 decimals.
double l_over_kw(int l_level, int kw_level);

// Sobol mixed design: numeric coordinates mapped affinely onto the ranges,
// categorical coordinate u to level floor(u*m)+1 (clamped). Point layout is
// [x coordinates | categorical coordinates]. Responses are left empty.
MixedDataset sample_mixed_design(const BenchmarkFunction& fn, Eigen::Index n,
                                 std::uint64_t skip = 0);

// True responses for every sample of a design.
Eigen::VectorXd evaluate_all(const BenchmarkFunction& fn, const MixedDataset& design);

Eigen::VectorXd add_noise(const Eigen::VectorXd& y, double variance, std::uint64_t seed);

double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

// Shipped non-zero noise variances: (range/50)^2 and (range/20)^2, with the
// response range measured on a fixed 2^15-point Sobol scan.
struct NoisePresets {
  double small = 0.0;
  double large = 0.0;
  double range = 0.0;
};
NoisePresets noise_presets(const BenchmarkFunction& fn);

// Variable-length pattern: NaN out one categorical variable for specific
// level pairs of the others (functions 1 and 3): (t1=1,t2=1) -> t3 NaN,
// (t1=2,t3=2) -> t2 NaN, (t2=3,t3=3) -> t1 NaN.
std::vector<int> apply_varlen_pattern(const std::vector<int>& combo);

// Schema copy with nan_allowed set on every variable.
CategoricalSchema varlen_schema(const BenchmarkFunction& fn);

// Monte-Carlo total-effect (Sobol) indices with the two-matrix Saltelli
// estimator over the box [lo, hi]; `f` maps one full input row to the
// response. The seed offsets the Sobol window.
Eigen::VectorXd total_effect_indices(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                     Eigen::Index n_base, std::uint64_t seed = 0);

// Benchmark wrapper: categorical inputs range continuously over their
// underlying [min, max] level values. Output order: numeric inputs, then
// categorical.
Eigen::VectorXd total_effect_indices(const BenchmarkFunction& fn, Eigen::Index n_base,
                                     std::uint64_t seed = 0);
std::vector<std::string> input_names(const BenchmarkFunction& fn);

}  // namespace lmgp
