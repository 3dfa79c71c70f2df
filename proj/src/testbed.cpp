#include "lmgp/testbed.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "lmgp/rng.hpp"
#include "lmgp/sobol.hpp"

namespace lmgp {

namespace {

constexpr double kPi = std::numbers::pi;

BenchmarkFunction make_function(int id) {
  BenchmarkFunction f;
  f.id = id;
  auto set_x = [&f](std::vector<std::string> names, std::vector<double> lo,
                    std::vector<double> hi) {
    f.x_names = std::move(names);
    f.x_lo = Eigen::Map<Eigen::VectorXd>(lo.data(), lo.size());
    f.x_hi = Eigen::Map<Eigen::VectorXd>(hi.data(), hi.size());
  };
  auto set_t = [&f](std::vector<std::string> names,
                    std::vector<std::vector<double>> values) {
    std::vector<CategoricalVariable> vars;
    for (std::size_t i = 0; i < names.size(); ++i) {
      CategoricalVariable v;
      v.name = std::move(names[i]);
      for (std::size_t lvl = 1; lvl <= values[i].size(); ++lvl)
        v.levels.push_back(std::to_string(lvl));
      vars.push_back(std::move(v));
    }
    f.schema = CategoricalSchema(std::move(vars));
    f.level_values = std::move(values);
  };

  switch (id) {
    case 1:
      f.name = "olt-circuit";
      set_x({"R_b2", "R_c1", "R_c2"}, {50, 1.2, 0.01}, {70, 2.5, 5});
      set_t({"R_b1", "R_f", "beta"}, {{25, 32.5, 40}, {0.5, 2, 3}, {1, 4, 5}});
      f.nan_values = {35, 1, 2};
      break;
    case 2:
      f.name = "piston";
      set_x({"k", "P_0", "T", "T_0"}, {2000, 2e5, 10, 10}, {3000, 1.5e6, 500, 760});
      set_t({"M", "S", "V_0"}, {{30, 40, 50}, {0.005, 1, 2}, {0.002, 0.4, 1}});
      break;
    case 3:
      f.name = "borehole";
      set_x({"T_u", "H_u", "H_l", "r", "r_w"}, {100, 990, 700, 100, 0.05},
            {1000, 1110, 820, 1e4, 0.15});
      set_t({"T_l", "L", "K_w"},
            {{10, 30, 100, 200, 500}, {1000, 1400, 2000}, {6000, 10000, 12000}});
      f.nan_values = {350, 1100, 8000};
      break;
    case 4:
      f.name = "effective-potential";
      set_x({"x1", "x2", "x3", "x4", "x5", "x6"}, {0, 0, 0, 0, 0, 0}, {1, 1, 1, 1, 1, 1});
      set_t({"x7", "x8", "x9", "x10"},
            {{0.1, 0.25, 0.7, 0.8, 1},
             {1, 2, 4, 9, 10},
             {5, 10, 12.5, 25, 30},
             {0.01, 0.02, 0.1, 0.3, 0.5}});
      break;
    case 5:
      f.name = "wing-weight";
      set_x({"A", "Lambda", "q", "lambda", "N_z", "W_p"}, {6, -10, 16, 0.5, 2.5, 0.025},
            {10, 10, 45, 1, 6, 0.08});
      set_t({"S_w", "W_fw", "t_c", "W_dg"},
            {{150, 180, 200}, {220, 250, 300}, {0.08, 0.12, 0.18}, {1700, 2000, 2500}});
      break;
    case 6:
      f.name = "custom";
      set_x({"x1", "x2", "x5", "x6", "x7"}, {0, 0, 0, 0, 0}, {1, 1, 1, 1, 1});
      set_t({"x3", "x4", "x8"}, {{0, 0.1, 0.3, 0.6, 0.7, 1}, {0, 0.2, 0.7, 1}, {0, 0.4, 1}});
      break;
    default:
      throw std::invalid_argument("benchmark id must be in 1..6");
  }
  return f;
}

}  // namespace

double BenchmarkFunction::evaluate_numeric(const Eigen::VectorXd& v) const {
  switch (id) {
    case 1: {
      // v = [R_b2, R_c1, R_c2, R_b1, R_f, beta]
      const double Rb2 = v[0], Rc1 = v[1], Rc2 = v[2], Rb1 = v[3], Rf = v[4], beta = v[5];
      const double Vb1 = 12.0 * Rb2 / (Rb1 + Rb2);
      const double bc = beta * (Rc2 + 9.0);
      return ((Vb1 + 0.74) * bc + 11.35 * Rf) / (bc + Rf) +
             0.74 * Rf * bc / ((bc + Rf) * Rc1);
    }
    case 2: {
      // v = [k, P_0, T, T_0, M, S, V_0]
      const double k = v[0], P0 = v[1], T = v[2], T0 = v[3], M = v[4], S = v[5], V0 = v[6];
      const double A = P0 * S + 19.62 * M - k * V0 / S;
      const double V = S / (2.0 * k) * std::sqrt(A * A + 4.0 * k * (P0 / T0) * T);
      return 2.0 * kPi * std::sqrt(M / (k + S * S * P0 * V0 * T / (T0 * V * V)));
    }
    case 3: {
      // v = [T_u, H_u, H_l, r, r_w, T_l, L, K_w]
      const double Tu = v[0], Hu = v[1], Hl = v[2], r = v[3], rw = v[4];
      const double Tl = v[5], L = v[6], Kw = v[7];
      const double lg = std::log(r / rw);
      return 2.0 * kPi * Tu * (Hu - Hl) /
             (lg * (1.0 + 2.0 * L * Tu / (lg * rw * rw * Kw) + Tu / Tl));
    }
    case 4: {
      // v = [x1..x6, x7..x10]; strain tensor from x1..x6
      const double x1 = v[0], x2 = v[1], x3 = v[2], x4 = v[3], x5 = v[4], x6 = v[5];
      const double x7 = v[6], x8 = v[7], x9 = v[8], x10 = v[9];
      const double em = (x1 + x2 + x3) / 3.0;
      const double d1 = x1 - em, d2 = x2 - em, d3 = x3 - em;
      const double dd = d1 * d1 + d2 * d2 + d3 * d3 +
                        2.0 * (x4 * x4 + x5 * x5 + x6 * x6);
      const double eeq = std::sqrt(2.0 / 3.0 * dd);
      return 100.0 * 4.5 * x9 * em * em +
             x8 * x10 / (1.0 + x7) * std::pow(eeq / x10, 1.0 + x7);
    }
    case 5: {
      // v = [A, Lambda (deg), q, lambda, N_z, W_p, S_w, W_fw, t_c, W_dg]
      const double A = v[0], Lam = v[1] * kPi / 180.0, q = v[2], lam = v[3];
      const double Nz = v[4], Wp = v[5], Sw = v[6], Wfw = v[7], tc = v[8], Wdg = v[9];
      const double c = std::cos(Lam);
      return 0.036 * std::pow(Sw, 0.758) * std::pow(Wfw, 0.0035) *
                 std::pow(A / (c * c), 0.6) * std::pow(q, 0.006) * std::pow(lam, 0.04) *
                 std::pow(100.0 * tc / c, -0.3) * std::pow(Nz * Wdg, 0.49) +
             Sw * Wp;
    }
    case 6: {
      // v = [x1, x2, x5, x6, x7, x3, x4, x8]
      const double x1 = v[0], x2 = v[1], x5 = v[2], x6 = v[3], x7 = v[4];
      const double x3 = v[5], x4 = v[6], x8 = v[7];
      const double a = x1 - 2.0 + 8.0 * x2 - 8.0 * x2 * x2;
      double y = 4.0 * a * a + (3.0 - 4.0 * x2) * (3.0 - 4.0 * x2) +
                 16.0 * std::sqrt(x3 + 1.0) * (2.0 * x3 - 1.0) * (2.0 * x3 - 1.0);
      const double xs[6] = {x3, x4, x5, x6, x7, x8};  // x_3..x_8 in index order
      double run = 0.0;
      for (int i = 0; i < 6; ++i) {
        run += xs[i];
        if (i >= 1) y += std::log(1.0 + run);  // sum over i = 4..8
      }
      return y;
    }
  }
  throw std::logic_error("unreachable");
}

double BenchmarkFunction::evaluate(const MixedSample& w) const {
  if (w.x.size() != x_lo.size())
    throw std::invalid_argument("quantitative dimension mismatch");
  for (Eigen::Index j = 0; j < w.x.size(); ++j)
    if (w.x[j] < x_lo[j] || w.x[j] > x_hi[j])
      throw std::invalid_argument("numeric input " + x_names[j] + " out of range");
  schema.validate_combo(w.t);

  Eigen::VectorXd full(dim_x() + dim_t());
  full.head(dim_x()) = w.x;
  for (int v = 0; v < dim_t(); ++v) {
    if (w.t[v] == kLevelNaN) {
      if (nan_values.empty())
        throw std::invalid_argument("function has no hidden NaN values");
      full[dim_x() + v] = nan_values[v];
    } else {
      full[dim_x() + v] = level_values[v][w.t[v] - 1];
    }
  }
  return evaluate_numeric(full);
}

void BenchmarkFunction::categorical_value_ranges(Eigen::VectorXd& lo,
                                                 Eigen::VectorXd& hi) const {
  lo.resize(dim_t());
  hi.resize(dim_t());
  for (int v = 0; v < dim_t(); ++v) {
    lo[v] = *std::min_element(level_values[v].begin(), level_values[v].end());
    hi[v] = *std::max_element(level_values[v].begin(), level_values[v].end());
  }
}

const BenchmarkFunction& benchmark(int id) {
  static const std::map<int, BenchmarkFunction> registry = [] {
    std::map<int, BenchmarkFunction> m;
    for (int i = 1; i <= 6; ++i) m.emplace(i, make_function(i));
    return m;
  }();
  auto it = registry.find(id);
  if (it == registry.end()) throw std::invalid_argument("benchmark id must be in 1..6");
  return it->second;
}

double eval_function(int id, const MixedSample& w) { return benchmark(id).evaluate(w); }

double level_value(int id, const std::string& variable, int level) {
  const auto& fn = benchmark(id);
  for (int v = 0; v < fn.dim_t(); ++v) {
    if (fn.schema.variable(v).name == variable) {
      if (level < 1 || level > static_cast<int>(fn.level_values[v].size()))
        throw std::invalid_argument("level out of range for " + variable);
      return fn.level_values[v][level - 1];
    }
  }
  throw std::invalid_argument("no categorical variable named " + variable);
}

double l_over_kw(int l_level, int kw_level) {
  const double ratio = level_value(3, "L", l_level) / level_value(3, "K_w", kw_level);
  return std::round(ratio * 1000.0) / 1000.0;
}

MixedDataset sample_mixed_design(const BenchmarkFunction& fn, Eigen::Index n,
                                 std::uint64_t skip) {
  const int dx = fn.dim_x(), dt = fn.dim_t();
  const Eigen::MatrixXd U = sobol_points(dx + dt, n, skip);
  MixedDataset data;
  data.schema = fn.schema;
  data.x_lo = fn.x_lo;
  data.x_hi = fn.x_hi;
  data.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    MixedSample& s = data.samples[i];
    s.x = fn.x_lo + U.row(i).head(dx).transpose().cwiseProduct(fn.x_hi - fn.x_lo);
    s.t.resize(dt);
    for (int v = 0; v < dt; ++v) {
      const int m = fn.schema.levels(v);
      s.t[v] = std::min(m, static_cast<int>(U(i, dx + v) * m) + 1);
    }
  }
  return data;
}

Eigen::VectorXd evaluate_all(const BenchmarkFunction& fn, const MixedDataset& design) {
  Eigen::VectorXd y(design.size());
  for (std::size_t i = 0; i < design.size(); ++i) y[i] = fn.evaluate(design.samples[i]);
  return y;
}

Eigen::VectorXd add_noise(const Eigen::VectorXd& y, double variance, std::uint64_t seed) {
  if (variance < 0) throw std::invalid_argument("noise variance must be nonnegative");
  if (variance == 0) return y;
  Rng rng(seed, 0x6e6f6973ULL);
  const double sd = std::sqrt(variance);
  Eigen::VectorXd out = y;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += sd * rng.normal();
  return out;
}

double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("mse: length mismatch");
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

NoisePresets noise_presets(const BenchmarkFunction& fn) {
  static std::map<int, NoisePresets> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(fn.id);
  if (it != cache.end()) return it->second;

  const Eigen::Index kScan = 1 << 15;
  const MixedDataset scan = sample_mixed_design(fn, kScan, 0);
  const Eigen::VectorXd y = evaluate_all(fn, scan);
  NoisePresets p;
  p.range = y.maxCoeff() - y.minCoeff();
  p.small = (p.range / 50.0) * (p.range / 50.0);
  p.large = (p.range / 20.0) * (p.range / 20.0);
  cache[fn.id] = p;
  return p;
}

std::vector<int> apply_varlen_pattern(const std::vector<int>& combo) {
  if (combo.size() != 3) throw std::invalid_argument("varlen pattern expects 3 variables");
  std::vector<int> out = combo;
  if (combo[0] == 1 && combo[1] == 1)
    out[2] = kLevelNaN;
  else if (combo[0] == 2 && combo[2] == 2)
    out[1] = kLevelNaN;
  else if (combo[1] == 3 && combo[2] == 3)
    out[0] = kLevelNaN;
  return out;
}

CategoricalSchema varlen_schema(const BenchmarkFunction& fn) {
  std::vector<CategoricalVariable> vars;
  for (std::size_t v = 0; v < fn.schema.count(); ++v) {
    CategoricalVariable var = fn.schema.variable(v);
    var.nan_allowed = true;
    vars.push_back(std::move(var));
  }
  return CategoricalSchema(std::move(vars));
}

Eigen::VectorXd total_effect_indices(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                     Eigen::Index n_base, std::uint64_t seed) {
  const int d = static_cast<int>(lo.size());
  const Eigen::MatrixXd U = sobol_points(2 * d, n_base, seed);
  Eigen::MatrixXd A(n_base, d), B(n_base, d);
  for (int j = 0; j < d; ++j) {
    A.col(j) = lo[j] + (hi[j] - lo[j]) * U.col(j).array();
    B.col(j) = lo[j] + (hi[j] - lo[j]) * U.col(d + j).array();
  }

  Eigen::VectorXd fA(n_base), fB(n_base);
  for (Eigen::Index i = 0; i < n_base; ++i) {
    fA[i] = f(A.row(i).transpose());
    fB[i] = f(B.row(i).transpose());
  }
  const double mean = (fA.sum() + fB.sum()) / (2.0 * n_base);
  const double var =
      ((fA.array() - mean).square().sum() + (fB.array() - mean).square().sum()) /
      (2.0 * n_base);

  Eigen::VectorXd indices(d);
  Eigen::VectorXd row(d);
  for (int j = 0; j < d; ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n_base; ++i) {
      row = A.row(i);
      row[j] = B(i, j);
      const double diff = fA[i] - f(row);
      acc += diff * diff;
    }
    indices[j] = acc / (2.0 * n_base * var);
  }
  return indices;
}

Eigen::VectorXd total_effect_indices(const BenchmarkFunction& fn, Eigen::Index n_base,
                                     std::uint64_t seed) {
  const int d = fn.dim_x() + fn.dim_t();
  Eigen::VectorXd lo(d), hi(d);
  lo.head(fn.dim_x()) = fn.x_lo;
  hi.head(fn.dim_x()) = fn.x_hi;
  Eigen::VectorXd clo, chi;
  fn.categorical_value_ranges(clo, chi);
  lo.tail(fn.dim_t()) = clo;
  hi.tail(fn.dim_t()) = chi;
  return total_effect_indices([&fn](const Eigen::VectorXd& v) { return fn.evaluate_numeric(v); },
                              lo, hi, n_base, seed);
}

std::vector<std::string> input_names(const BenchmarkFunction& fn) {
  std::vector<std::string> names = fn.x_names;
  for (std::size_t v = 0; v < fn.schema.count(); ++v)
    names.push_back(fn.schema.variable(v).name);
  return names;
}

}  // namespace lmgp
