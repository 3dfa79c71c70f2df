#include "lmgp/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "lmgp/rng.hpp"

namespace lmgp {

namespace {

double norm_pdf(double u) {
  return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
}

double norm_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

// Initial design shared by BO and the random baseline: a seeded partial
// Fisher-Yates over the pool indices, optionally leaving the optimum out.
std::vector<int> draw_initial_design(const CandidatePool& pool, int init_size,
                                     Direction direction, Rng& rng, bool exclude_optimum) {
  std::vector<int> indices;
  const int optimum = pool.best_index(direction);
  for (int i = 0; i < static_cast<int>(pool.size()); ++i)
    if (!exclude_optimum || i != optimum) indices.push_back(i);
  if (init_size > static_cast<int>(indices.size()))
    throw std::invalid_argument("initial design larger than the eligible pool");
  for (int i = 0; i < init_size; ++i) {
    const int j = i + static_cast<int>(rng.uniform_index(indices.size() - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(init_size);
  return indices;
}

MixedDataset evaluated_subset(const CandidatePool& pool) {
  MixedDataset data;
  data.schema = pool.schema;
  data.x_lo = pool.x_lo;
  data.x_hi = pool.x_hi;
  std::vector<double> ys;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!pool.evaluated[i]) continue;
    data.samples.push_back(pool.samples[i]);
    ys.push_back(pool.responses[static_cast<Eigen::Index>(i)]);
  }
  data.y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  return data;
}

double incumbent_value(const CandidatePool& pool, Direction direction) {
  const double sign = direction == Direction::Maximize ? 1.0 : -1.0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (pool.evaluated[i]) best = std::max(best, sign * pool.responses[static_cast<Eigen::Index>(i)]);
  return sign * best;
}

}  // namespace

double expected_improvement(double mu, double sigma, double y_best, Direction direction) {
  const double sign = direction == Direction::Maximize ? 1.0 : -1.0;
  const double improvement = sign * (mu - y_best);
  if (!(sigma > 0.0)) return std::max(improvement, 0.0);
  const double u = improvement / sigma;
  return improvement * norm_cdf(u) + sigma * norm_pdf(u);
}

int CandidatePool::count_evaluated() const {
  return static_cast<int>(std::count(evaluated.begin(), evaluated.end(), true));
}

int CandidatePool::best_index(Direction direction) const {
  if (samples.empty()) throw std::invalid_argument("empty candidate pool");
  const double sign = direction == Direction::Maximize ? 1.0 : -1.0;
  int best = 0;
  for (int i = 1; i < static_cast<int>(size()); ++i)
    if (sign * responses[i] > sign * responses[best]) best = i;
  return best;
}

int bo_step(const FittedModel& model, const CandidatePool& pool, Direction direction,
            double y_best) {
  int chosen = -1;
  double best_ei = -1.0;
  for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
    if (pool.evaluated[i]) continue;
    const PredictivePoint p = model.predict(pool.samples[i]);
    const double ei = expected_improvement(p.mean, std::sqrt(std::max(p.variance, 0.0)),
                                           y_best, direction);
    if (ei > best_ei) {
      best_ei = ei;
      chosen = i;
    }
  }
  if (chosen < 0) throw std::runtime_error("no unevaluated candidates left");
  return chosen;
}

BoTrajectory bo_run(CandidatePool pool, const BoConfig& config) {
  BoTrajectory traj;
  const int target = pool.best_index(config.direction);

  Rng rng(config.seed, 0x696e6974ULL);
  traj.init_indices = draw_initial_design(pool, config.init_size, config.direction, rng,
                                          config.exclude_optimum_from_init);
  pool.evaluated.assign(pool.size(), false);
  for (int idx : traj.init_indices) pool.evaluated[idx] = true;
  if (pool.evaluated[target]) {  // optimum landed in the initial draw
    traj.found_target = true;
    return traj;
  }

  Hyperparameters warm;
  bool have_warm = false;
  for (int iteration = 1;; ++iteration) {
    if (pool.count_evaluated() == static_cast<int>(pool.size())) break;
    if (config.budget && traj.additional_evaluations >= *config.budget) break;

    const MixedDataset data = evaluated_subset(pool);
    FitConfig fit_cfg = config.fit;
    const int key[2] = {static_cast<int>(config.seed), iteration};
    fit_cfg.seed = fnv1a64(key, 2);

    FittedModel model;
    bool fitted = false;
    for (int attempt = 0; attempt < 2 && !fitted; ++attempt) {
      try {
        model = fit_with_continuation(data, fit_cfg, nullptr,
                                      (config.warm_start && have_warm) ? &warm : nullptr);
        fitted = true;
      } catch (const std::exception&) {
        fit_cfg.seed += 1;
      }
    }
    if (!fitted) return traj;  // partial trajectory
    warm = model.hypers;
    have_warm = true;

    const double y_best = incumbent_value(pool, config.direction);
    const int chosen = bo_step(model, pool, config.direction, y_best);
    pool.evaluated[chosen] = true;
    ++traj.additional_evaluations;

    BoStep step;
    step.iteration = iteration;
    step.chosen = chosen;
    step.observed = pool.responses[chosen];
    step.incumbent = incumbent_value(pool, config.direction);
    traj.steps.push_back(step);

    if (chosen == target) {
      traj.found_target = true;
      break;
    }
  }
  return traj;
}

int random_search_baseline(const CandidatePool& pool, int init_size, Direction direction,
                           std::uint64_t seed, bool exclude_optimum_from_init) {
  Rng rng(seed, 0x696e6974ULL);
  const std::vector<int> init =
      draw_initial_design(pool, init_size, direction, rng, exclude_optimum_from_init);
  const int target = pool.best_index(direction);
  if (std::find(init.begin(), init.end(), target) != init.end()) return 0;

  std::vector<int> remaining;
  for (int i = 0; i < static_cast<int>(pool.size()); ++i)
    if (std::find(init.begin(), init.end(), i) == init.end()) remaining.push_back(i);

  int draws = 0;
  while (!remaining.empty()) {
    const int j = static_cast<int>(rng.uniform_index(remaining.size()));
    const int chosen = remaining[j];
    remaining.erase(remaining.begin() + j);
    ++draws;
    if (chosen == target) return draws;
  }
  throw std::logic_error("pool optimum missing from the draw sequence");
}

}  // namespace lmgp
