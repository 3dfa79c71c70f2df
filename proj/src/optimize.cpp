#include "lmgp/optimize.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "lmgp/rng.hpp"

namespace lmgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd clip(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                     const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Infinity norm of x - P(x - g): zero exactly at a box-constrained
// stationary point.
double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                               const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return (x - clip(x - g, lo, hi)).cwiseAbs().maxCoeff();
}

}  // namespace

int OptimizationReport::best_index() const {
  int best = -1;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (starts[i].termination == "infeasible-start") continue;
    if (best < 0 || starts[i].f < starts[best].f) best = static_cast<int>(i);
  }
  return best;
}

StartResult minimize_lbfgs(const Objective& objective, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const LbfgsOptions& options) {
  const Eigen::Index dim = x0.size();
  StartResult result;
  result.x0 = clip(x0, lower, upper);

  Eigen::VectorXd x = result.x0;
  Eigen::VectorXd g(dim);
  double f = objective.value_grad(x, g);
  ++result.evaluations;
  if (!std::isfinite(f)) {
    result.x = x;
    result.f = kInf;
    result.termination = "infeasible-start";
    return result;
  }

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> history;  // (s, y)
  const double c1 = 1e-4, c2 = 0.9;
  int ftol_hits = 0;
  result.termination = "max-iter";

  for (int iter = 0; iter < options.max_iter; ++iter) {
    result.iterations = iter;
    if (projected_gradient_norm(x, g, lower, upper) < options.gtol) {
      result.termination = "gtol";
      break;
    }

    // Coordinates sitting on a bound with the gradient pushing outward are
    // frozen by the projection; keeping them in the quasi-Newton model makes
    // the direction grind against the box.  Mask them out instead.
    Eigen::VectorXd mask = Eigen::VectorXd::Ones(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
      if ((x[j] <= lower[j] && g[j] > 0.0) || (x[j] >= upper[j] && g[j] < 0.0))
        mask[j] = 0.0;
    }
    const Eigen::VectorXd gm = g.cwiseProduct(mask);

    // Two-loop recursion for d = -H gm, restricted to the free coordinates.
    Eigen::VectorXd d = -gm;
    if (!history.empty()) {
      std::vector<double> alpha_coef(history.size());
      for (std::size_t i = history.size(); i-- > 0;) {
        const auto& [s, yv] = history[i];
        alpha_coef[i] = s.dot(d) / s.dot(yv);
        d -= alpha_coef[i] * yv;
      }
      const auto& [s_last, y_last] = history.back();
      d *= s_last.dot(y_last) / y_last.squaredNorm();
      for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& [s, yv] = history[i];
        d += (alpha_coef[i] - yv.dot(d) / s.dot(yv)) * s;
      }
      d = d.cwiseProduct(mask);
    }
    if (gm.dot(d) >= 0.0) d = -gm;  // fall back to steepest descent

    // Slope of phi(a) = f(P(x + a d)) at the point xp: coordinates pinned by
    // the projection contribute nothing.
    const auto path_slope = [&](const Eigen::VectorXd& xp, const Eigen::VectorXd& gp) {
      double slope = 0.0;
      for (Eigen::Index j = 0; j < dim; ++j) {
        if ((xp[j] <= lower[j] && d[j] < 0.0) || (xp[j] >= upper[j] && d[j] > 0.0)) continue;
        slope += gp[j] * d[j];
      }
      return slope;
    };
    const double slope0 = path_slope(x, g);
    if (slope0 >= 0.0) {
      if (!history.empty()) {
        history.clear();
        continue;
      }
      result.termination = "line-search";
      break;
    }

    // Strong-Wolfe line search (bracket then bisection zoom) along the
    // projected path; every trial evaluates the gradient, which the
    // curvature test needs anyway and the accepted iterate reuses.
    double a = 1.0;
    if (history.empty()) a = std::min(1.0, 1.0 / gm.cwiseAbs().maxCoeff());
    double a_prev = 0.0, f_prev = f;
    double b_lo = 0.0, b_hi = 0.0, f_lo = f;
    bool accepted = false, bracketed = false;
    Eigen::VectorXd x_new, g_new(dim);
    double f_new = 0.0;
    int trials = 0;
    while (trials < options.max_line_search) {
      x_new = clip(x + a * d, lower, upper);
      if ((x_new - x).cwiseAbs().maxCoeff() == 0.0) break;
      f_new = objective.value_grad(x_new, g_new);
      ++result.evaluations;
      ++trials;
      if (!std::isfinite(f_new) || f_new > f + c1 * a * slope0 ||
          (trials > 1 && f_new >= f_prev)) {
        b_lo = a_prev;
        f_lo = f_prev;
        b_hi = a;
        bracketed = true;
        break;
      }
      const double slope = path_slope(x_new, g_new);
      if (std::abs(slope) <= -c2 * slope0) {
        accepted = true;
        break;
      }
      if (slope >= 0.0) {
        b_lo = a;
        f_lo = f_new;
        b_hi = a_prev;
        bracketed = true;
        break;
      }
      a_prev = a;
      f_prev = f_new;
      a *= 2.0;
    }
    while (!accepted && bracketed && trials < options.max_line_search) {
      a = 0.5 * (b_lo + b_hi);
      if (std::abs(b_hi - b_lo) <= 1e-14 * std::max(1.0, std::abs(b_lo))) break;
      x_new = clip(x + a * d, lower, upper);
      f_new = objective.value_grad(x_new, g_new);
      ++result.evaluations;
      ++trials;
      if (!std::isfinite(f_new) || f_new > f + c1 * a * slope0 || f_new >= f_lo) {
        b_hi = a;
        continue;
      }
      const double slope = path_slope(x_new, g_new);
      if (std::abs(slope) <= -c2 * slope0) {
        accepted = true;
        break;
      }
      if (slope * (b_hi - b_lo) >= 0.0) b_hi = b_lo;
      b_lo = a;
      f_lo = f_new;
    }
    if (!accepted && b_lo > 0.0 && f_lo < f) {
      // Zoom ran out of trials: settle for the best sufficient-decrease point.
      x_new = clip(x + b_lo * d, lower, upper);
      f_new = objective.value_grad(x_new, g_new);
      ++result.evaluations;
      accepted = std::isfinite(f_new) && f_new < f;
    }
    if (!accepted) {
      if (!history.empty()) {
        history.clear();  // retry from a steepest-descent model once
        continue;
      }
      result.termination = "line-search";
      break;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {
      history.emplace_back(s, yv);
      if (static_cast<int>(history.size()) > options.memory) history.pop_front();
    }

    const double drop = f - f_new;
    x = x_new;
    g = g_new;
    f = f_new;
    if (drop <= options.ftol * std::max(1.0, std::abs(f))) {
      if (++ftol_hits >= 2) {
        result.termination = "ftol";
        break;
      }
    } else {
      ftol_hits = 0;
    }
  }

  result.x = x;
  result.f = f;
  return result;
}

OptimizationReport minimize_multistart(const Objective& objective,
                                       const Eigen::VectorXd& lower,
                                       const Eigen::VectorXd& upper, int n_starts,
                                       std::uint64_t seed, const LbfgsOptions& options,
                                       const std::vector<Eigen::VectorXd>& fixed_starts) {
  if (n_starts < 1) throw std::invalid_argument("n_starts must be >= 1");
  const Eigen::Index dim = lower.size();
  if (upper.size() != dim) throw std::invalid_argument("bound lengths differ");
  if (((upper - lower).array() < 0).any())
    throw std::invalid_argument("upper bound below lower bound");

  OptimizationReport report;
  report.seed = seed;

  for (int k = 0; k < n_starts; ++k) {
    Rng rng(seed, static_cast<std::uint64_t>(k));
    Eigen::VectorXd x0(dim);
    bool feasible = false;
    const int resamples = 10;
    for (int attempt = 0; attempt <= resamples; ++attempt) {
      if (k < static_cast<int>(fixed_starts.size()) && attempt == 0) {
        x0 = clip(fixed_starts[k], lower, upper);
      } else {
        for (Eigen::Index j = 0; j < dim; ++j) x0[j] = rng.uniform(lower[j], upper[j]);
      }
      if (std::isfinite(objective.value(x0))) {
        feasible = true;
        break;
      }
    }
    if (!feasible) {
      StartResult skip;
      skip.x0 = x0;
      skip.x = x0;
      skip.f = kInf;
      skip.termination = "infeasible-start";
      report.starts.push_back(std::move(skip));
      continue;
    }
    report.starts.push_back(minimize_lbfgs(objective, x0, lower, upper, options));
  }

  const int best = report.best_index();
  if (best < 0) throw std::runtime_error("all optimizer starts were infeasible");
  report.best_x = report.starts[best].x;
  report.best_f = report.starts[best].f;
  return report;
}

}  // namespace lmgp
