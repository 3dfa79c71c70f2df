#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "doctest.h"
#include "lmgp/fit.hpp"
#include "lmgp/gp.hpp"

using namespace lmgp;

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

MixedDataset numeric_dataset(int n, unsigned seed, double (*f)(double)) {
  MixedDataset data;
  data.x_lo = Eigen::VectorXd::Zero(1);
  data.x_hi = Eigen::VectorXd::Ones(1);
  data.y.resize(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    MixedSample s;
    s.x = Eigen::VectorXd::Constant(1, (i + unif(rng)) / n);
    data.samples.push_back(s);
    data.y[i] = f(data.samples.back().x[0]);
  }
  return data;
}

MixedDataset mixed_dataset(int n, unsigned seed) {
  MixedDataset data;
  data.schema = make_schema({2, 3});
  data.x_lo = Eigen::Vector2d(0.0, -2.0);
  data.x_hi = Eigen::Vector2d(4.0, 2.0);
  data.y.resize(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    MixedSample s;
    s.x = Eigen::Vector2d(4.0 * unif(rng), -2.0 + 4.0 * unif(rng));
    s.t = {1 + static_cast<int>(unif(rng) * 2), 1 + static_cast<int>(unif(rng) * 3)};
    data.samples.push_back(s);
    data.y[i] = std::sin(s.x[0]) + 0.5 * s.x[1] + 0.7 * s.t[0] - 0.3 * s.t[1] * s.t[1];
  }
  return data;
}

// Dense-algebra reimplementation of the predictive formulas with explicit
// inverses, in the model's standardized coordinates.
struct DenseOracle {
  Eigen::MatrixXd Rinv;
  Eigen::VectorXd ys;
  double beta = 0.0, sigma2 = 0.0, ftrf = 0.0;
  std::vector<MixedSample> train_s;
  const FittedModel* model = nullptr;

  explicit DenseOracle(const FittedModel& m) : model(&m) {
    const Eigen::Index n = static_cast<Eigen::Index>(m.train.size());
    ys.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      MixedSample s = m.train.samples[i];
      s.x = m.standardizer.scale_x(s.x);
      train_s.push_back(s);
      ys[i] = m.standardizer.scale_y(m.train.y[i]);
    }
    Eigen::MatrixXd Rd(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        Rd(i, j) = mixed_correlation(train_s[i], train_s[j], m.hypers);
    Rd.diagonal().array() += m.hypers.delta + kDiagFloor;
    Rinv = Rd.inverse();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    ftrf = ones.dot(Rinv * ones);
    beta = ones.dot(Rinv * ys) / ftrf;
    Eigen::VectorXd r = ys - ones * beta;
    sigma2 = r.dot(Rinv * r) / static_cast<double>(n);
  }

  Eigen::VectorXd corr(const MixedSample& w) const {
    MixedSample ws = w;
    ws.x = model->standardizer.scale_x(ws.x);
    Eigen::VectorXd g(static_cast<Eigen::Index>(train_s.size()));
    for (std::size_t i = 0; i < train_s.size(); ++i)
      g[static_cast<Eigen::Index>(i)] = mixed_correlation(ws, train_s[i], model->hypers);
    return g;
  }

  PredictivePoint predict(const MixedSample& w) const {
    const Eigen::VectorXd g = corr(w);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.size());
    const double mean_s = beta + g.dot(Rinv * (ys - ones * beta));
    const double h = 1.0 - ones.dot(Rinv * g);
    const double var_s = sigma2 * (1.0 - g.dot(Rinv * g) + h * h / ftrf);
    const double ysd2 = model->standardizer.y_std * model->standardizer.y_std;
    return {model->standardizer.unscale_y(mean_s), var_s * ysd2};
  }

  double cov(const MixedSample& wa, const MixedSample& wb) const {
    MixedSample sa = wa, sb = wb;
    sa.x = model->standardizer.scale_x(sa.x);
    sb.x = model->standardizer.scale_x(sb.x);
    const double c = mixed_correlation(sa, sb, model->hypers);
    const Eigen::VectorXd ga = corr(wa), gb = corr(wb);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(ga.size());
    const double ha = 1.0 - ones.dot(Rinv * ga);
    const double hb = 1.0 - ones.dot(Rinv * gb);
    const double ysd2 = model->standardizer.y_std * model->standardizer.y_std;
    return sigma2 * (c - ga.dot(Rinv * gb) + ha * hb / ftrf) * ysd2;
  }
};

}  // namespace

TEST_CASE("gaussian correlation") {
  Eigen::Vector3d x(0.3, -1.2, 4.0);
  Eigen::Vector3d omega(0.5, -1.0, 2.0);
  CHECK(gaussian_correlation(x, x, omega) == 1.0);

  Eigen::Vector3d x2 = x;
  x2[0] -= 1.0;
  CHECK(gaussian_correlation(x, x2, Eigen::Vector3d::Zero()) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Vector3d a, b, w;
    for (int i = 0; i < 3; ++i) {
      a[i] = unif(rng);
      b[i] = unif(rng);
      w[i] = unif(rng);
    }
    double e = 0.0;
    for (int i = 0; i < 3; ++i) e += std::pow(10.0, w[i]) * (a[i] - b[i]) * (a[i] - b[i]);
    CHECK(gaussian_correlation(a, b, w) == doctest::Approx(std::exp(-e)).epsilon(1e-14));
  }

  CHECK_THROWS_AS(gaussian_correlation(x, x2.head(2), omega), std::invalid_argument);
}

TEST_CASE("mixed correlation reduces to a concatenated numeric kernel") {
  CategoricalSchema schema = make_schema({2, 3});
  auto enc = std::make_shared<PriorEncoder>(schema, PriorStrategy::OneHotGrouped);
  Hyperparameters hypers;
  hypers.omega = Eigen::Vector2d(0.3, -0.7);
  hypers.map.kind = LatentMap::Kind::LMGP;
  hypers.map.encoder = enc;
  hypers.map.A = Eigen::MatrixXd::Random(5, 2);

  MixedSample w, w2;
  w.x = Eigen::Vector2d(0.2, 0.9);
  w.t = {1, 3};
  w2.x = Eigen::Vector2d(0.6, -0.4);
  w2.t = {2, 2};
  CHECK(mixed_correlation(w, w, hypers) == 1.0);

  // Oracle: append the latent coordinates as numeric inputs with omega = 0.
  Eigen::VectorXd za = hypers.map.latent(w.t), zb = hypers.map.latent(w2.t);
  Eigen::VectorXd xa(4), xb(4), omega_ext(4);
  xa << w.x, za;
  xb << w2.x, zb;
  omega_ext << hypers.omega, 0.0, 0.0;
  CHECK(mixed_correlation(w, w2, hypers) ==
        doctest::Approx(gaussian_correlation(xa, xb, omega_ext)).epsilon(1e-14));

  // Unit latent distance with matching x gives exp(-1).
  hypers.map.A.setZero();
  hypers.map.A(0, 0) = 1.0;  // rows of variable 1: level 1 -> (1,0), level 2 -> (0,0)
  MixedSample w3 = w;
  w3.t = {2, 3};
  CHECK(mixed_correlation(w, w3, hypers) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  MixedSample bad = w2;
  bad.t = {1, 4};
  CHECK_THROWS_AS(mixed_correlation(w, bad, hypers), std::invalid_argument);

  // Empty schema: pure-numeric GP equals the plain Gaussian kernel.
  Hyperparameters plain;
  plain.omega = hypers.omega;
  MixedSample u, v;
  u.x = w.x;
  v.x = w2.x;
  CHECK(mixed_correlation(u, v, plain) ==
        gaussian_correlation(u.x, v.x, plain.omega));
}

TEST_CASE("correlation matrix assembly") {
  Hyperparameters hypers;
  hypers.omega = Eigen::VectorXd::Zero(1);
  hypers.delta = 0.1;

  MixedDataset one;
  one.samples.push_back({Eigen::VectorXd::Constant(1, 0.4), {}});
  Eigen::MatrixXd R1 = build_correlation_matrix(one, hypers);
  REQUIRE(R1.rows() == 1);
  CHECK(R1(0, 0) == 1.1);

  MixedDataset dup;
  dup.samples.push_back({Eigen::VectorXd::Constant(1, 0.4), {}});
  dup.samples.push_back({Eigen::VectorXd::Constant(1, 0.4), {}});
  Eigen::MatrixXd R2 = build_correlation_matrix(dup, hypers);
  CHECK(R2(0, 0) == 1.1);
  CHECK(R2(1, 1) == 1.1);
  CHECK(R2(0, 1) == 1.0);
  CHECK(R2(1, 0) == 1.0);

  MixedDataset five = mixed_dataset(5, 7);
  CategoricalSchema schema = five.schema;
  auto enc = std::make_shared<PriorEncoder>(schema, PriorStrategy::OneHotGrouped);
  Hyperparameters mh;
  mh.omega = Eigen::Vector2d(0.2, -0.5);
  mh.delta = 0.03;
  mh.map.kind = LatentMap::Kind::LMGP;
  mh.map.encoder = enc;
  mh.map.A = Eigen::MatrixXd::Random(5, 2) * 0.5;
  Eigen::MatrixXd R = build_correlation_matrix(five, mh);
  CHECK((R - R.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const double expected = i == j ? 1.0 + mh.delta
                                     : mixed_correlation(five.samples[i], five.samples[j], mh);
      CHECK(R(i, j) == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("generalized least squares estimates") {
  const int n = 6;
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd y(n);
  y << 1.0, -0.5, 2.0, 0.25, 1.5, -1.0;
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, 1);

  Eigen::VectorXd beta = profile_beta(I, ones, y);
  CHECK(beta[0] == doctest::Approx(y.mean()).epsilon(1e-14));
  CHECK(profile_sigma2(I, ones, y, beta) ==
        doctest::Approx((y.array() - y.mean()).square().sum() / n).epsilon(1e-14));

  // F = identity: beta reproduces y and the residual vanishes.
  Eigen::VectorXd beta_full = profile_beta(I, I, y);
  CHECK((beta_full - y).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(profile_sigma2(I, I, y, beta_full) <= 1e-299);  // degenerate clamp

  // Random SPD system vs explicit-inverse oracle.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd Q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Q(i, j) = unif(rng);
  Eigen::MatrixXd R = Q * Q.transpose() + n * I;
  Eigen::MatrixXd F(n, 2);
  for (int i = 0; i < n; ++i) {
    F(i, 0) = 1.0;
    F(i, 1) = unif(rng);
  }
  Eigen::VectorXd b = profile_beta(R, F, y);
  Eigen::MatrixXd Rinv = R.inverse();
  Eigen::VectorXd b_oracle = (F.transpose() * Rinv * F).inverse() * F.transpose() * Rinv * y;
  CHECK((b - b_oracle).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::VectorXd r = y - F * b_oracle;
  CHECK(profile_sigma2(R, F, y, b) ==
        doctest::Approx(r.dot(Rinv * r) / n).epsilon(1e-12));

  CHECK_THROWS(profile_beta(-I, ones, y));
}

TEST_CASE("profile likelihood identity case") {
  // Two points so far apart (on the 10^omega scale) that their correlation
  // underflows to zero: R_delta is the identity and L collapses to 0.
  MixedDataset data;
  data.samples.push_back({Eigen::VectorXd::Constant(1, 0.0), {}});
  data.samples.push_back({Eigen::VectorXd::Constant(1, 1.0), {}});
  data.y.resize(2);
  data.y << 0.0, 2.0;
  Hyperparameters hypers;
  hypers.omega = Eigen::VectorXd::Constant(1, 3.0);
  hypers.delta = 0.0;
  CHECK(neg_log_profile_likelihood(hypers, data) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("profile likelihood matches the unreduced likelihood oracle") {
  MixedDataset data = numeric_dataset(8, 3, [](double x) { return std::cos(3.0 * x); });
  Hyperparameters hypers;
  hypers.omega = Eigen::VectorXd::Constant(1, 0.5);
  hypers.delta = 0.01;

  const double L = neg_log_profile_likelihood(hypers, data);

  Eigen::MatrixXd Rd = build_correlation_matrix(data, hypers);
  Rd.diagonal().array() += kDiagFloor;
  Eigen::MatrixXd Rinv = Rd.inverse();
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(8);
  const double beta = ones.dot(Rinv * data.y) / ones.dot(Rinv * ones);
  Eigen::VectorXd r = data.y - ones * beta;
  const double s2 = r.dot(Rinv * r) / 8.0;
  const double full = 8.0 * std::log(kTwoPi) + 8.0 * std::log(s2) +
                      std::log(Rd.determinant()) + r.dot(Rinv * r) / s2;
  CHECK(L == doctest::Approx(full - 8.0 * std::log(kTwoPi) - 8.0).epsilon(1e-10));
}

TEST_CASE("likelihood responds to affine response changes as expected") {
  MixedDataset data = numeric_dataset(10, 9, [](double x) { return x * x - 0.3 * x; });
  Hyperparameters hypers;
  hypers.omega = Eigen::VectorXd::Constant(1, 0.8);
  hypers.delta = 1e-4;
  const double L = neg_log_profile_likelihood(hypers, data);

  MixedDataset scaled = data;
  scaled.y *= 3.0;
  CHECK(neg_log_profile_likelihood(hypers, scaled) ==
        doctest::Approx(L + 10.0 * std::log(9.0)).epsilon(1e-10));

  MixedDataset shifted = data;
  shifted.y.array() += 42.0;
  CHECK(neg_log_profile_likelihood(hypers, shifted) == doctest::Approx(L).epsilon(1e-10));
}

TEST_CASE("prediction matches a dense explicit-inverse oracle") {
  MixedDataset data = mixed_dataset(10, 21);
  FitConfig cfg;
  cfg.kind = ModelKind::LMGP;
  cfg.seed = 4;
  FitProblem problem(data, cfg);

  // Arbitrary interior hyperparameters; no optimization needed to test the
  // predictive algebra.
  Eigen::VectorXd p = problem.lower() + 0.45 * (problem.upper() - problem.lower());
  p[p.size() - 1] = -2.0;  // log10 delta
  FittedModel model = problem.finalize(p);
  CHECK(model.sigma2 > 0.0);
  CHECK(model.noise_variance() ==
        doctest::Approx(model.hypers.delta * model.sigma2 * model.standardizer.y_std *
                        model.standardizer.y_std)
            .epsilon(1e-15));

  DenseOracle oracle(model);
  CHECK(oracle.beta == doctest::Approx(model.beta[0]).epsilon(1e-9));
  CHECK(oracle.sigma2 == doctest::Approx(model.sigma2).epsilon(1e-9));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<MixedSample> probes;
  for (int k = 0; k < 5; ++k) {
    MixedSample w;
    w.x = Eigen::Vector2d(4.0 * unif(rng), -2.0 + 4.0 * unif(rng));
    w.t = {1 + static_cast<int>(unif(rng) * 2), 1 + static_cast<int>(unif(rng) * 3)};
    probes.push_back(w);
  }
  auto batch = model.predict_batch(probes);
  for (std::size_t k = 0; k < probes.size(); ++k) {
    PredictivePoint expect = oracle.predict(probes[k]);
    PredictivePoint got = model.predict(probes[k]);
    CHECK(got.mean == doctest::Approx(expect.mean).epsilon(1e-8));
    CHECK(got.variance == doctest::Approx(expect.variance).epsilon(1e-8));
    CHECK(got.variance >= 0.0);
    CHECK(batch[k].mean == got.mean);
    CHECK(batch[k].variance == got.variance);
  }

  // Posterior covariance: symmetry, diagonal consistency, dense oracle.
  const double c01 = model.predict_cov(probes[0], probes[1]);
  CHECK(c01 == doctest::Approx(model.predict_cov(probes[1], probes[0])).epsilon(1e-12));
  CHECK(c01 == doctest::Approx(oracle.cov(probes[0], probes[1])).epsilon(1e-8));
  CHECK(model.predict_cov(probes[2], probes[2]) ==
        doctest::Approx(model.predict(probes[2]).variance).epsilon(1e-10));
}

TEST_CASE("prediction interpolates and reverts to the prior mean") {
  MixedDataset data = numeric_dataset(10, 13, [](double x) { return std::sin(5.0 * x); });
  FitConfig cfg;
  cfg.kind = ModelKind::GP;
  FitProblem problem(data, cfg);

  Eigen::VectorXd p(2);
  p << 1.0, -10.0;  // omega, log10 delta at the floor
  FittedModel model = problem.finalize(p);

  const double range = data.y.maxCoeff() - data.y.minCoeff();
  for (int i = 0; i < 10; ++i) {
    PredictivePoint pr = model.predict(data.samples[i]);
    CHECK(std::abs(pr.mean - data.y[i]) < 1e-5 * range);
    CHECK(pr.variance <=
          1e-4 * model.sigma2 * model.standardizer.y_std * model.standardizer.y_std);
  }

  MixedSample far;
  far.x = Eigen::VectorXd::Constant(1, 100.0);
  PredictivePoint pr = model.predict(far);
  CHECK(pr.mean == doctest::Approx(model.standardizer.unscale_y(model.beta[0])).epsilon(1e-9));
  CHECK(pr.variance >=
        model.sigma2 * model.standardizer.y_std * model.standardizer.y_std);
}

TEST_CASE("standardizer maps declared ranges to the unit box") {
  MixedDataset data = mixed_dataset(8, 30);
  Standardizer s = Standardizer::fit(data);
  CHECK((s.scale_x(data.x_lo) - Eigen::Vector2d::Zero()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s.scale_x(data.x_hi) - Eigen::Vector2d::Ones()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.unscale_y(s.scale_y(3.7)) == doctest::Approx(3.7).epsilon(1e-14));

  double mean = 0.0, var = 0.0;
  for (Eigen::Index i = 0; i < data.y.size(); ++i) mean += s.scale_y(data.y[i]);
  mean /= static_cast<double>(data.y.size());
  for (Eigen::Index i = 0; i < data.y.size(); ++i)
    var += (s.scale_y(data.y[i]) - mean) * (s.scale_y(data.y[i]) - mean);
  var /= static_cast<double>(data.y.size() - 1);
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("latent position table covers the schema in combo order") {
  MixedDataset data = mixed_dataset(12, 40);
  FitConfig cfg;
  cfg.kind = ModelKind::LMGP;
  FitProblem problem(data, cfg);
  Eigen::VectorXd p = problem.lower() + 0.3 * (problem.upper() - problem.lower());
  FittedModel model = problem.finalize(p);

  LatentTable table = latent_positions(model);
  REQUIRE(table.Z.rows() == 6);
  REQUIRE(table.labels.size() == 6);
  CHECK(table.labels[0] == "1/1");
  CHECK(table.labels[5] == "2/3");
  // Canonical frame: first combo at the origin, second on the z1 axis.
  CHECK(table.Z.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(table.Z(1, 0) >= 0.0);
  CHECK(std::abs(table.Z(1, 1)) < 1e-12);

  // A = 0 collapses every combination onto the origin.
  Eigen::VectorXd pz = p;
  pz.segment(2, 10).setZero();  // the packed A block
  FittedModel zero = problem.finalize(pz);
  CHECK(latent_positions(zero).Z.cwiseAbs().maxCoeff() == 0.0);

  // Pure-numeric models have no latent table.
  MixedDataset numeric = numeric_dataset(6, 2, [](double x) { return x; });
  FitConfig gp_cfg;
  gp_cfg.kind = ModelKind::GP;
  FitProblem gp_problem(numeric, gp_cfg);
  Eigen::VectorXd gp = gp_problem.lower() + 0.5 * (gp_problem.upper() - gp_problem.lower());
  FittedModel gp_model = gp_problem.finalize(gp);
  CHECK_THROWS(latent_positions(gp_model));
}
