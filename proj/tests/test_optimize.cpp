#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "lmgp/optimize.hpp"

using namespace lmgp;

namespace {

Objective make_objective(double (*f)(const Eigen::VectorXd&),
                         Eigen::VectorXd (*g)(const Eigen::VectorXd&)) {
  Objective obj;
  obj.value = [f](const Eigen::VectorXd& x) { return f(x); };
  obj.value_grad = [f, g](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    grad = g(x);
    return f(x);
  };
  return obj;
}

double quad_f(const Eigen::VectorXd& p) { return (p[0] - 3.0) * (p[0] - 3.0); }
Eigen::VectorXd quad_g(const Eigen::VectorXd& p) {
  return Eigen::VectorXd::Constant(1, 2.0 * (p[0] - 3.0));
}

double rosen_f(const Eigen::VectorXd& p) {
  const double a = 1.0 - p[0];
  const double b = p[1] - p[0] * p[0];
  return a * a + 100.0 * b * b;
}
Eigen::VectorXd rosen_g(const Eigen::VectorXd& p) {
  Eigen::VectorXd g(2);
  const double b = p[1] - p[0] * p[0];
  g[0] = -2.0 * (1.0 - p[0]) - 400.0 * p[0] * b;
  g[1] = 200.0 * b;
  return g;
}

}  // namespace

TEST_CASE("convex quadratic converges from any start") {
  Objective obj = make_objective(quad_f, quad_g);
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(1), hi = Eigen::VectorXd::Constant(1, 10.0);
  for (double start : {0.0, 0.5, 3.0, 9.9}) {
    StartResult r = minimize_lbfgs(obj, Eigen::VectorXd::Constant(1, start), lo, hi);
    CHECK(std::abs(r.x[0] - 3.0) < 1e-6);
    CHECK(r.f <= quad_f(r.x0));
  }
  OptimizationReport report = minimize_multistart(obj, lo, hi, 4, 17);
  CHECK(std::abs(report.best_x[0] - 3.0) < 1e-6);
}

TEST_CASE("Rosenbrock with twelve starts finds the analytic minimum") {
  Objective obj = make_objective(rosen_f, rosen_g);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -2.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 2.0);
  OptimizationReport report = minimize_multistart(obj, lo, hi, 12, 0);
  CHECK(std::abs(report.best_x[0] - 1.0) < 1e-4);
  CHECK(std::abs(report.best_x[1] - 1.0) < 1e-4);
  CHECK(report.best_f < 1e-8);
  CHECK(report.starts.size() == 12);
  CHECK(report.best_f == report.starts[report.best_index()].f);
  for (const auto& s : report.starts) CHECK(report.best_f <= s.f);
}

TEST_CASE("reports are bitwise deterministic per seed") {
  Objective obj = make_objective(rosen_f, rosen_g);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -2.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 2.0);
  OptimizationReport a = minimize_multistart(obj, lo, hi, 6, 99);
  OptimizationReport b = minimize_multistart(obj, lo, hi, 6, 99);
  REQUIRE(a.starts.size() == b.starts.size());
  CHECK(a.best_f == b.best_f);
  CHECK((a.best_x - b.best_x).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t i = 0; i < a.starts.size(); ++i) {
    CHECK((a.starts[i].x0 - b.starts[i].x0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.starts[i].f == b.starts[i].f);
    CHECK(a.starts[i].iterations == b.starts[i].iterations);
    CHECK(a.starts[i].termination == b.starts[i].termination);
  }

  OptimizationReport c = minimize_multistart(obj, lo, hi, 6, 100);
  bool same_starts = true;
  for (std::size_t i = 0; i < a.starts.size(); ++i)
    same_starts = same_starts && (a.starts[i].x0 - c.starts[i].x0).cwiseAbs().maxCoeff() == 0.0;
  CHECK_FALSE(same_starts);
}

TEST_CASE("iterates respect the box") {
  // Unconstrained optimum at 3 sits outside the box [0, 2].
  Objective obj = make_objective(quad_f, quad_g);
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(1), hi = Eigen::VectorXd::Constant(1, 2.0);
  StartResult r = minimize_lbfgs(obj, Eigen::VectorXd::Constant(1, 0.5), lo, hi);
  CHECK(r.x[0] == 2.0);

  // Objective that records every evaluation point.
  std::vector<Eigen::VectorXd> seen;
  Objective spy;
  spy.value = [&](const Eigen::VectorXd& x) {
    seen.push_back(x);
    return rosen_f(x);
  };
  spy.value_grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    seen.push_back(x);
    grad = rosen_g(x);
    return rosen_f(x);
  };
  Eigen::VectorXd lo2 = Eigen::VectorXd::Constant(2, -0.5);
  Eigen::VectorXd hi2 = Eigen::VectorXd::Constant(2, 0.5);
  minimize_multistart(spy, lo2, hi2, 3, 5);
  REQUIRE(!seen.empty());
  for (const auto& x : seen) {
    CHECK((x.array() >= lo2.array()).all());
    CHECK((x.array() <= hi2.array()).all());
  }
}

TEST_CASE("fixed starts run first and infeasible regions resample") {
  Objective obj = make_objective(quad_f, quad_g);
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(1), hi = Eigen::VectorXd::Constant(1, 10.0);
  Eigen::VectorXd pinned = Eigen::VectorXd::Constant(1, 7.5);
  OptimizationReport report = minimize_multistart(obj, lo, hi, 3, 1, {}, {pinned});
  CHECK(report.starts[0].x0[0] == 7.5);

  // +inf on the left half: starts landing there must resample, not abort.
  Objective half;
  half.value = [](const Eigen::VectorXd& x) {
    return x[0] < 5.0 ? std::numeric_limits<double>::infinity() : quad_f(x);
  };
  half.value_grad = [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    if (x[0] < 5.0) return std::numeric_limits<double>::infinity();
    grad = quad_g(x);
    return quad_f(x);
  };
  OptimizationReport partial = minimize_multistart(half, lo, hi, 8, 3);
  for (const auto& s : partial.starts)
    if (s.termination != "infeasible-start") CHECK(s.x0[0] >= 5.0);
  CHECK(std::isfinite(partial.best_f));
  CHECK(partial.best_x[0] == doctest::Approx(5.0).epsilon(1e-6));

  // Nothing feasible anywhere: the whole fit fails loudly.
  Objective never;
  never.value = [](const Eigen::VectorXd&) {
    return std::numeric_limits<double>::infinity();
  };
  never.value_grad = [](const Eigen::VectorXd&, Eigen::VectorXd&) {
    return std::numeric_limits<double>::infinity();
  };
  CHECK_THROWS_AS(minimize_multistart(never, lo, hi, 2, 0), std::runtime_error);

  CHECK_THROWS_AS(minimize_multistart(obj, lo, hi, 0, 0), std::invalid_argument);
}

TEST_CASE("ill-scaled bowl still terminates inside the budget") {
  Objective obj;
  obj.value = [](const Eigen::VectorXd& x) {
    return x[0] * x[0] + 1e6 * x[1] * x[1];
  };
  obj.value_grad = [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    grad.resize(2);
    grad[0] = 2.0 * x[0];
    grad[1] = 2e6 * x[1];
    return x[0] * x[0] + 1e6 * x[1] * x[1];
  };
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -1.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 1.0);
  LbfgsOptions opts;
  StartResult r = minimize_lbfgs(obj, Eigen::VectorXd::Constant(2, 0.9), lo, hi, opts);
  CHECK(r.iterations <= opts.max_iter);
  CHECK(r.f < 1e-8);
  CHECK(std::abs(r.x[0]) < 1e-4);
  CHECK(std::abs(r.x[1]) < 1e-4);
}
