#include "lmgp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include "json.hpp"
#include <thread>

#include "lmgp/io.hpp"
#include "lmgp/rng.hpp"
#include "lmgp/testbed.hpp"

namespace lmgp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Sobol windows: each replicate owns a disjoint 2^17 stretch of the sequence,
// test points starting 2^16 into it. The synthetic BO pool lives past 2^20.
constexpr std::uint64_t kReplicateWindow = 1ULL << 17;
constexpr std::uint64_t kTestOffset = 1ULL << 16;
constexpr std::uint64_t kPoolSkip = 1ULL << 20;

std::string kind_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Fit: return "fit";
    case ExperimentKind::Predict: return "predict";
    case ExperimentKind::LatentExport: return "latent";
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::Varlen: return "varlen";
    case ExperimentKind::Sensitivity: return "sensitivity";
    case ExperimentKind::Bo: return "bo";
  }
  return "?";
}

ExperimentKind kind_from_string(const std::string& s) {
  if (s == "fit") return ExperimentKind::Fit;
  if (s == "predict") return ExperimentKind::Predict;
  if (s == "latent") return ExperimentKind::LatentExport;
  if (s == "sweep") return ExperimentKind::Sweep;
  if (s == "varlen") return ExperimentKind::Varlen;
  if (s == "sensitivity") return ExperimentKind::Sensitivity;
  if (s == "bo") return ExperimentKind::Bo;
  throw ConfigError("unknown experiment kind '" + s +
                    "' (expected fit/predict/latent/sweep/varlen/sensitivity/bo)");
}

std::string model_string(ModelKind k) {
  switch (k) {
    case ModelKind::GP: return "GP";
    case ModelKind::LMGP: return "LMGP";
    case ModelKind::LVGP: return "LVGP";
  }
  return "?";
}

ModelKind model_from_string(const std::string& s) {
  if (s == "GP") return ModelKind::GP;
  if (s == "LMGP") return ModelKind::LMGP;
  if (s == "LVGP") return ModelKind::LVGP;
  throw ConfigError("unknown model kind '" + s + "' (expected GP/LMGP/LVGP)");
}

std::string prior_string(PriorStrategy p) {
  switch (p) {
    case PriorStrategy::OneHotGrouped: return "one-hot";
    case PriorStrategy::Random: return "random";
    case PriorStrategy::Lumped: return "lumped";
  }
  return "?";
}

PriorStrategy prior_from_string(const std::string& s) {
  if (s == "one-hot") return PriorStrategy::OneHotGrouped;
  if (s == "random") return PriorStrategy::Random;
  if (s == "lumped") return PriorStrategy::Lumped;
  throw ConfigError("unknown prior '" + s + "' (expected one-hot/random/lumped)");
}

std::uint64_t hash_bytes(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<int> key) {
  std::vector<int> k(key);
  return fnv1a64(k.data(), k.size(), 0xcbf29ce484222325ULL ^ seed);
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Work items fill pre-assigned slots, so file contents do not depend on the
// worker count or scheduling order.
void parallel_for(int n, int jobs, const std::function<void(int)>& body) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  for (auto& t : pool) t.join();
}

struct CellOutcome {
  std::vector<std::string> row;
  double seconds = 0.0;
  bool ok = true;
};

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

void stamp(CsvWriter& w, const ExperimentConfig& cfg) {
  w.comment("config=" + hex16(config_hash(cfg)) + " version=" + kToolVersion);
}

void write_timings(const ExperimentConfig& cfg, const std::string& name,
                   const std::vector<CellOutcome>& cells) {
  std::ofstream out(out_path(cfg, name));
  out << "# wall-clock seconds per result row, in file order\n";
  for (std::size_t i = 0; i < cells.size(); ++i)
    out << i << " " << cells[i].seconds << "\n";
}

const std::vector<std::string> kResultColumns = {
    "experiment", "model",     "function",  "n_train",     "noise_var", "replicate",
    "seed",       "test_mse",  "noise_est", "converged_L", "status"};

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// One sweep/varlen cell: sample, evaluate, perturb, fit, score. `row_model`
// and the fit configuration carry the model-kind/NaN-strategy specifics.
CellOutcome run_cell(const ExperimentConfig& cfg, const BenchmarkFunction& fn,
                     const std::string& experiment, const std::string& row_model,
                     FitConfig fit_cfg, int model_idx, int n_train, int noise_idx,
                     double noise_var, int replicate, bool varlen) {
  const auto t0 = std::chrono::steady_clock::now();
  CellOutcome o;
  std::string mse_s, noise_s, like_s, status = "ok";
  try {
    const std::uint64_t base = static_cast<std::uint64_t>(replicate) * kReplicateWindow;
    MixedDataset train = sample_mixed_design(fn, n_train, base);
    MixedDataset test = sample_mixed_design(fn, cfg.test_size, base + kTestOffset);
    if (varlen) {
      // Evaluation must accept the NaN-ed out levels, so it goes through a
      // schema-relaxed copy of the function.
      BenchmarkFunction relaxed = fn;
      relaxed.schema = varlen_schema(fn);
      train.schema = relaxed.schema;
      test.schema = relaxed.schema;
      for (auto& s : train.samples) s.t = apply_varlen_pattern(s.t);
      for (auto& s : test.samples) s.t = apply_varlen_pattern(s.t);
      train.y = evaluate_all(relaxed, train);
      test.y = evaluate_all(relaxed, test);
    } else {
      train.y = evaluate_all(fn, train);
      test.y = evaluate_all(fn, test);
    }
    if (noise_var > 0.0) {
      const int kt[5] = {fn.id, n_train, noise_idx, replicate, 0};
      train.y = add_noise(train.y, noise_var, fnv1a64(kt, 5, 0xcbf29ce484222325ULL ^ cfg.seed));
      const int ks[5] = {fn.id, n_train, noise_idx, replicate, 1};
      test.y = add_noise(test.y, noise_var, fnv1a64(ks, 5, 0xcbf29ce484222325ULL ^ cfg.seed));
    }
    fit_cfg.seed = derive_seed(cfg.seed, {fn.id, model_idx, n_train, noise_idx, replicate, 2});

    const FittedModel model = fit_with_continuation(train, fit_cfg);
    const auto preds = model.predict_batch(test.samples);
    Eigen::VectorXd mu(static_cast<Eigen::Index>(preds.size()));
    for (Eigen::Index i = 0; i < mu.size(); ++i) mu[i] = preds[i].mean;
    mse_s = format_double(mse(mu, test.y));
    noise_s = format_double(model.noise_variance());
    like_s = format_double(model.objective);
    o.row = {experiment,
             row_model,
             fn.name,
             std::to_string(n_train),
             format_double(noise_var),
             std::to_string(replicate),
             std::to_string(fit_cfg.seed),
             mse_s,
             noise_s,
             like_s,
             status};
  } catch (const std::exception& e) {
    o.ok = false;
    o.row = {experiment,   row_model,
             fn.name,      std::to_string(n_train),
             format_double(noise_var), std::to_string(replicate),
             std::to_string(fit_cfg.seed), "",
             "",           "",
             "failed"};
    std::fprintf(stderr, "cell failed (%s %s n=%d noise=%g rep=%d): %s\n", experiment.c_str(),
                 row_model.c_str(), n_train, noise_var, replicate, e.what());
  }
  o.seconds = elapsed_seconds(t0);
  return o;
}

}  // namespace

FitConfig ExperimentConfig::fit_config(ModelKind model_kind, std::uint64_t fit_seed) const {
  FitConfig f;
  f.kind = model_kind;
  f.prior = prior;
  f.d_z = d_z;
  f.n_starts = n_starts;
  f.lbfgs = lbfgs;
  f.seed = fit_seed;
  return f;
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  // jobs and the output directory are excluded: they affect where and how
  // fast results are produced, never the results themselves.
  json e;
  e["kind"] = kind_string(c.kind);
  e["function"] = c.function_id;
  e["dataset"] = c.dataset_path;
  e["inputs"] = c.input_path;
  e["artifact"] = c.model_path;
  e["candidates"] = c.candidates_path;
  json models = json::array();
  for (ModelKind m : c.models) models.push_back(model_string(m));
  e["models"] = std::move(models);
  e["prior"] = prior_string(c.prior);
  e["train_sizes"] = c.train_sizes;
  e["noise"] = c.noise_variances;
  e["replicates"] = c.replicates;
  e["test_size"] = c.test_size;
  e["n_base"] = c.n_base;
  e["train_fraction"] = c.train_fraction;
  e["seed"] = c.seed;

  json o;
  o["n_starts"] = c.n_starts;
  o["d_z"] = c.d_z;
  o["max_iter"] = c.lbfgs.max_iter;
  o["gtol"] = c.lbfgs.gtol;
  o["ftol"] = c.lbfgs.ftol;
  o["memory"] = c.lbfgs.memory;

  json b;
  b["init"] = c.bo_init;
  b["pool"] = c.bo_pool;
  b["seeds"] = c.bo_seeds;
  b["direction"] = c.bo_direction == Direction::Maximize ? "maximize" : "minimize";
  b["budget"] = c.bo_budget ? json(*c.bo_budget) : json();

  const json all = {{"experiment", std::move(e)}, {"optimizer", std::move(o)}, {"bo", std::move(b)}};
  return hash_bytes(all.dump());
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw ConfigError(path + ": " + ex.what());
  }

  ExperimentConfig c;
  try {
    const json e = j.value("experiment", json::object());
    if (!e.contains("kind")) throw ConfigError("experiment.kind is required");
    c.kind = kind_from_string(e["kind"].get<std::string>());
    c.function_id = e.value("function", 3);
    c.dataset_path = e.value("dataset", "");
    c.input_path = e.value("inputs", "");
    c.model_path = e.value("artifact", "");
    c.candidates_path = e.value("candidates", "");
    if (e.contains("models")) {
      c.models.clear();
      for (const auto& m : e["models"]) c.models.push_back(model_from_string(m.get<std::string>()));
    }
    c.prior = prior_from_string(e.value("prior", "one-hot"));
    if (e.contains("train_sizes")) c.train_sizes = e["train_sizes"].get<std::vector<int>>();
    if (e.contains("noise")) c.noise_variances = e["noise"].get<std::vector<double>>();
    c.replicates = e.value("replicates", 10);
    c.test_size = e.value("test_size", 10000);
    c.n_base = e.value("n_base", 1L << 14);
    c.train_fraction = e.value("train_fraction", 1.0);
    c.seed = e.value("seed", std::uint64_t{0});
    c.jobs = e.value("jobs", 1);
    c.out_dir = e.value("out", ".");

    const json o = j.value("optimizer", json::object());
    c.n_starts = o.value("n_starts", 12);
    c.d_z = o.value("d_z", 2);
    c.lbfgs.max_iter = o.value("max_iter", 500);
    c.lbfgs.gtol = o.value("gtol", 1e-6);
    c.lbfgs.ftol = o.value("ftol", 1e-10);
    c.lbfgs.memory = o.value("memory", 10);

    const json b = j.value("bo", json::object());
    c.bo_init = b.value("init", 40);
    c.bo_pool = b.value("pool", 240);
    c.bo_seeds = b.value("seeds", 30);
    const std::string dir = b.value("direction", "maximize");
    if (dir != "maximize" && dir != "minimize")
      throw ConfigError("bo.direction must be maximize or minimize");
    c.bo_direction = dir == "minimize" ? Direction::Minimize : Direction::Maximize;
    if (b.contains("budget")) c.bo_budget = b["budget"].get<int>();
  } catch (const json::exception& ex) {
    throw ConfigError(path + ": " + ex.what());
  }

  if (c.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (c.test_size < 1) throw ConfigError("test_size must be >= 1");
  if (c.function_id < 1 || c.function_id > 6)
    throw ConfigError("function must be in 1..6");
  if (c.models.empty()) throw ConfigError("models must not be empty");
  for (int n : c.train_sizes)
    if (n < 2) throw ConfigError("train_sizes entries must be >= 2");
  for (double v : c.noise_variances)
    if (v < 0.0) throw ConfigError("noise variances must be >= 0");
  if (!(c.train_fraction > 0.0 && c.train_fraction <= 1.0))
    throw ConfigError("train_fraction must be in (0, 1]");
  if (c.n_base < 4) throw ConfigError("n_base must be >= 4");
  if (c.n_starts < 1) throw ConfigError("n_starts must be >= 1");
  if (c.d_z < 1) throw ConfigError("d_z must be >= 1");
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (c.bo_init < 1 || c.bo_seeds < 1) throw ConfigError("bo.init and bo.seeds must be >= 1");

  for (const std::string* p : {&c.dataset_path, &c.input_path, &c.candidates_path})
    if (!p->empty() && !fs::exists(*p)) throw ConfigError("referenced path does not exist: " + *p);
  if (!c.model_path.empty() && c.kind != ExperimentKind::Fit && !fs::exists(c.model_path))
    throw ConfigError("referenced path does not exist: " + c.model_path);

  return c;
}

int run_benchmark_sweep(const ExperimentConfig& cfg) {
  const BenchmarkFunction& fn = benchmark(cfg.function_id);
  const std::vector<int> sizes =
      cfg.train_sizes.empty() ? std::vector<int>{100, 200, 300, 400} : cfg.train_sizes;
  std::vector<double> noises = cfg.noise_variances;
  if (noises.empty()) {
    const NoisePresets p = noise_presets(fn);
    noises = {0.0, p.small, p.large};
  }

  struct Cell {
    int model, size, noise, rep;
  };
  std::vector<Cell> cells;
  for (int m = 0; m < static_cast<int>(cfg.models.size()); ++m)
    for (int s = 0; s < static_cast<int>(sizes.size()); ++s)
      for (int v = 0; v < static_cast<int>(noises.size()); ++v)
        for (int r = 0; r < cfg.replicates; ++r) cells.push_back({m, s, v, r});

  std::vector<CellOutcome> out(cells.size());
  parallel_for(static_cast<int>(cells.size()), cfg.jobs, [&](int i) {
    const Cell& c = cells[i];
    out[i] = run_cell(cfg, fn, "sweep", model_string(cfg.models[c.model]),
                      cfg.fit_config(cfg.models[c.model], 0), c.model, sizes[c.size], c.noise,
                      noises[c.noise], c.rep, false);
  });

  CsvWriter w(out_path(cfg, "results.csv"));
  stamp(w, cfg);
  w.row(kResultColumns);
  bool any_failed = false;
  for (const auto& o : out) {
    w.row(o.row);
    any_failed = any_failed || !o.ok;
  }
  write_timings(cfg, "timings.txt", out);
  return any_failed ? 2 : 0;
}

int run_varlen_experiment(const ExperimentConfig& cfg) {
  const BenchmarkFunction& fn = benchmark(cfg.function_id);
  if (fn.nan_values.empty())
    throw ConfigError("varlen requires a function with hidden NaN values (1 or 3)");
  const std::vector<int> sizes =
      cfg.train_sizes.empty() ? std::vector<int>{400} : cfg.train_sizes;
  std::vector<double> noises = cfg.noise_variances;
  if (noises.empty()) {
    const NoisePresets p = noise_presets(fn);
    noises = {p.small, p.large};
  }
  const std::vector<std::pair<std::string, NanFill>> strategies = {
      {"LMGP-zero", NanFill::Zero}, {"LMGP-random", NanFill::Random}};

  struct Cell {
    int strat, size, noise, rep;
  };
  std::vector<Cell> cells;
  for (int m = 0; m < static_cast<int>(strategies.size()); ++m)
    for (int s = 0; s < static_cast<int>(sizes.size()); ++s)
      for (int v = 0; v < static_cast<int>(noises.size()); ++v)
        for (int r = 0; r < cfg.replicates; ++r) cells.push_back({m, s, v, r});

  std::vector<CellOutcome> out(cells.size());
  parallel_for(static_cast<int>(cells.size()), cfg.jobs, [&](int i) {
    const Cell& c = cells[i];
    FitConfig fc = cfg.fit_config(ModelKind::LMGP, 0);
    fc.nan_fill = strategies[c.strat].second;
    out[i] = run_cell(cfg, fn, "varlen", strategies[c.strat].first, fc, c.strat, sizes[c.size],
                      c.noise, noises[c.noise], c.rep, true);
  });

  CsvWriter w(out_path(cfg, "results.csv"));
  stamp(w, cfg);
  w.row(kResultColumns);
  bool any_failed = false;
  for (const auto& o : out) {
    w.row(o.row);
    any_failed = any_failed || !o.ok;
  }
  write_timings(cfg, "timings.txt", out);
  return any_failed ? 2 : 0;
}

int run_sensitivity(const ExperimentConfig& cfg) {
  const BenchmarkFunction& fn = benchmark(cfg.function_id);
  const Eigen::VectorXd idx = total_effect_indices(fn, cfg.n_base, cfg.seed);
  const std::vector<std::string> names = input_names(fn);

  CsvWriter w(out_path(cfg, "sensitivity.csv"));
  stamp(w, cfg);
  w.row({"input", "index"});
  for (Eigen::Index i = 0; i < idx.size(); ++i)
    w.row({names[static_cast<std::size_t>(i)], format_double(idx[i])});
  return 0;
}

int run_bo_race(const ExperimentConfig& cfg) {
  CandidatePool pool;
  std::string pool_name;
  if (!cfg.candidates_path.empty()) {
    pool = load_candidate_csv(cfg.candidates_path);
    pool_name = fs::path(cfg.candidates_path).stem().string();
  } else {
    const BenchmarkFunction& fn = benchmark(cfg.function_id);
    if (cfg.bo_pool <= cfg.bo_init) throw ConfigError("bo.pool must exceed bo.init");
    MixedDataset d = sample_mixed_design(fn, cfg.bo_pool, kPoolSkip);
    d.y = evaluate_all(fn, d);
    pool.schema = d.schema;
    pool.x_lo = d.x_lo;
    pool.x_hi = d.x_hi;
    pool.samples = std::move(d.samples);
    pool.responses = std::move(d.y);
    pool_name = fn.name;
  }
  pool.evaluated.assign(pool.size(), false);
  if (cfg.bo_init >= static_cast<int>(pool.size()))
    throw ConfigError("bo.init must be smaller than the candidate pool");

  const int n_models = static_cast<int>(cfg.models.size());
  const int n_runs = n_models * cfg.bo_seeds;
  std::vector<BoTrajectory> trajs(n_runs);
  std::vector<std::string> status(n_runs, "ok");
  std::vector<double> seconds(n_runs, 0.0);

  parallel_for(n_runs, cfg.jobs, [&](int i) {
    const auto t0 = std::chrono::steady_clock::now();
    const int m = i / cfg.bo_seeds;
    const int s = i % cfg.bo_seeds;
    BoConfig bc;
    bc.init_size = cfg.bo_init;
    bc.direction = cfg.bo_direction;
    bc.fit = cfg.fit_config(cfg.models[m], 0);
    bc.seed = derive_seed(cfg.seed, {s});
    bc.budget = cfg.bo_budget;
    try {
      trajs[i] = bo_run(pool, bc);
      if (!trajs[i].found_target && !cfg.bo_budget) status[i] = "failed";
    } catch (const std::exception& e) {
      status[i] = "failed";
      std::fprintf(stderr, "bo run failed (%s seed %d): %s\n",
                   model_string(cfg.models[m]).c_str(), s, e.what());
    }
    seconds[i] = elapsed_seconds(t0);
  });

  std::vector<int> baseline(cfg.bo_seeds);
  for (int s = 0; s < cfg.bo_seeds; ++s)
    baseline[s] = random_search_baseline(pool, cfg.bo_init, cfg.bo_direction,
                                         derive_seed(cfg.seed, {s}));

  CsvWriter runs(out_path(cfg, "bo_runs.csv"));
  stamp(runs, cfg);
  runs.row({"model", "pool", "seed", "draw_seed", "additional_evals", "found_target", "status"});
  bool any_failed = false;
  for (int i = 0; i < n_runs; ++i) {
    const int m = i / cfg.bo_seeds;
    const int s = i % cfg.bo_seeds;
    runs.row({model_string(cfg.models[m]), pool_name, std::to_string(s),
              std::to_string(derive_seed(cfg.seed, {s})),
              std::to_string(trajs[i].additional_evaluations),
              trajs[i].found_target ? "1" : "0", status[i]});
    any_failed = any_failed || status[i] != "ok";
  }
  for (int s = 0; s < cfg.bo_seeds; ++s)
    runs.row({"random", pool_name, std::to_string(s), std::to_string(derive_seed(cfg.seed, {s})),
              std::to_string(baseline[s]), "1", "ok"});

  // Per-model mean over all runs; a budget-censored run contributes its count.
  CsvWriter summary(out_path(cfg, "bo_summary.csv"));
  stamp(summary, cfg);
  summary.row({"model", "runs", "mean_additional", "min_additional", "max_additional"});
  auto summarize = [&](const std::string& name, const std::vector<int>& counts) {
    double sum = 0.0;
    int lo = counts[0], hi = counts[0];
    for (int c : counts) {
      sum += c;
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    summary.row({name, std::to_string(counts.size()),
                 format_double(sum / static_cast<double>(counts.size())), std::to_string(lo),
                 std::to_string(hi)});
  };
  std::vector<std::vector<int>> per_model(n_models);
  for (int i = 0; i < n_runs; ++i)
    per_model[i / cfg.bo_seeds].push_back(trajs[i].additional_evaluations);
  for (int m = 0; m < n_models; ++m) summarize(model_string(cfg.models[m]), per_model[m]);
  summarize("random", baseline);

  CsvWriter hist(out_path(cfg, "bo_histogram.csv"));
  stamp(hist, cfg);
  hist.row({"model", "additional_evals", "count"});
  auto histogram = [&](const std::string& name, const std::vector<int>& counts) {
    std::map<int, int> bins;
    for (int c : counts) ++bins[c];
    for (const auto& [value, count] : bins)
      hist.row({name, std::to_string(value), std::to_string(count)});
  };
  for (int m = 0; m < n_models; ++m) histogram(model_string(cfg.models[m]), per_model[m]);
  histogram("random", baseline);

  CsvWriter traj(out_path(cfg, "bo_trajectories.csv"));
  stamp(traj, cfg);
  traj.row({"model", "seed", "iter", "combo", "y", "incumbent"});
  for (int i = 0; i < n_runs; ++i) {
    const int m = i / cfg.bo_seeds;
    const int s = i % cfg.bo_seeds;
    for (const BoStep& st : trajs[i].steps)
      traj.row({model_string(cfg.models[m]), std::to_string(s), std::to_string(st.iteration),
                pool.schema.combo_label(pool.samples[st.chosen].t), format_double(st.observed),
                format_double(st.incumbent)});
  }

  std::ofstream times(out_path(cfg, "timings.txt"));
  times << "# wall-clock seconds per bo run, in bo_runs.csv order\n";
  for (int i = 0; i < n_runs; ++i) times << i << " " << seconds[i] << "\n";

  return any_failed ? 2 : 0;
}

namespace {

const std::vector<std::string> kFitColumns = {"experiment", "model",     "replicate", "seed",
                                              "n_train",    "n_test",    "test_mse",  "noise_est",
                                              "converged_L", "status"};

}  // namespace

int run_fit(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.empty()) throw ConfigError("fit requires experiment.dataset");
  const MixedDataset data = read_dataset_csv(cfg.dataset_path);
  if (data.y.size() != static_cast<Eigen::Index>(data.size()))
    throw ConfigError(cfg.dataset_path + ": fit requires a y column");
  const ModelKind kind = cfg.models.front();
  const std::string artifact =
      cfg.model_path.empty() ? out_path(cfg, "model.json") : cfg.model_path;

  CsvWriter w(out_path(cfg, "fit_results.csv"));
  stamp(w, cfg);
  w.row(kFitColumns);

  int rc = 0;
  bool saved = false;
  const int n = static_cast<int>(data.size());

  if (cfg.train_fraction >= 1.0) {
    const FitConfig fc = cfg.fit_config(kind, cfg.seed);
    try {
      const FittedModel model = fit_with_continuation(data, fc);
      save_model(artifact, model, fc);
      saved = true;
      w.row({"fit", model_string(kind), "0", std::to_string(fc.seed), std::to_string(n), "0", "",
             format_double(model.noise_variance()), format_double(model.objective), "ok"});
    } catch (const std::exception& e) {
      rc = 2;
      w.row({"fit", model_string(kind), "0", std::to_string(fc.seed), std::to_string(n), "0", "",
             "", "", "failed"});
      std::fprintf(stderr, "fit failed: %s\n", e.what());
    }
  } else {
    const int k = std::clamp(static_cast<int>(std::lround(cfg.train_fraction * n)), 2, n - 1);
    for (int rep = 0; rep < cfg.replicates; ++rep) {
      const std::uint64_t rep_seed = derive_seed(cfg.seed, {rep});
      Rng rng(rep_seed, 0x73706c74ULL);
      std::vector<int> order(n);
      for (int i = 0; i < n; ++i) order[i] = i;
      for (int i = 0; i < n - 1; ++i) {
        const int j = i + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n - i)));
        std::swap(order[i], order[j]);
      }
      MixedDataset train, test;
      train.schema = test.schema = data.schema;
      train.x_lo = test.x_lo = data.x_lo;
      train.x_hi = test.x_hi = data.x_hi;
      std::vector<double> ytr, yte;
      for (int i = 0; i < n; ++i) {
        auto& dst = i < k ? train : test;
        dst.samples.push_back(data.samples[order[i]]);
        (i < k ? ytr : yte).push_back(data.y[order[i]]);
      }
      train.y = Eigen::Map<Eigen::VectorXd>(ytr.data(), static_cast<Eigen::Index>(ytr.size()));
      test.y = Eigen::Map<Eigen::VectorXd>(yte.data(), static_cast<Eigen::Index>(yte.size()));

      try {
        const FitConfig fc = cfg.fit_config(kind, rep_seed);
        const FittedModel model = fit_with_continuation(train, fc);
        const auto preds = model.predict_batch(test.samples);
        Eigen::VectorXd mu(static_cast<Eigen::Index>(preds.size()));
        for (Eigen::Index i = 0; i < mu.size(); ++i) mu[i] = preds[i].mean;
        if (!saved) {
          save_model(artifact, model, fc);
          saved = true;
        }
        w.row({"fit", model_string(kind), std::to_string(rep), std::to_string(rep_seed),
               std::to_string(k), std::to_string(n - k), format_double(mse(mu, test.y)),
               format_double(model.noise_variance()), format_double(model.objective), "ok"});
      } catch (const std::exception& e) {
        rc = 2;
        w.row({"fit", model_string(kind), std::to_string(rep), std::to_string(rep_seed),
               std::to_string(k), std::to_string(n - k), "", "", "", "failed"});
        std::fprintf(stderr, "fit replicate %d failed: %s\n", rep, e.what());
      }
    }
  }
  return rc;
}

int run_predict(const ExperimentConfig& cfg) {
  if (cfg.model_path.empty()) throw ConfigError("predict requires experiment.artifact");
  if (cfg.input_path.empty()) throw ConfigError("predict requires experiment.inputs");
  const FittedModel model = load_model(cfg.model_path);
  const MixedDataset inputs = read_dataset_csv(cfg.input_path);
  if (inputs.dim_x() != model.train.dim_x() || inputs.dim_t() != model.train.dim_t())
    throw ConfigError(cfg.input_path + ": input columns do not match the model (" +
                      std::to_string(model.train.dim_x()) + " numeric, " +
                      std::to_string(model.train.dim_t()) + " categorical)");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    try {
      model.train.schema.validate_combo(inputs.samples[i].t);
    } catch (const std::exception& e) {
      throw ConfigError(cfg.input_path + ": row " + std::to_string(i + 1) + ": " + e.what());
    }
  }

  CsvWriter w(out_path(cfg, "predictions.csv"));
  stamp(w, cfg);
  w.row({"mean", "variance"});
  for (const MixedSample& s : inputs.samples) {
    const PredictivePoint p = model.predict(s);
    w.row({format_double(p.mean), format_double(p.variance)});
  }
  return 0;
}

int run_latent_export(const ExperimentConfig& cfg) {
  FittedModel model;
  if (!cfg.model_path.empty()) {
    model = load_model(cfg.model_path);
  } else if (!cfg.dataset_path.empty()) {
    const MixedDataset data = read_dataset_csv(cfg.dataset_path);
    if (data.y.size() != static_cast<Eigen::Index>(data.size()))
      throw ConfigError(cfg.dataset_path + ": latent export requires a y column");
    model = fit_with_continuation(data, cfg.fit_config(cfg.models.front(), cfg.seed));
  } else {
    throw ConfigError("latent export requires experiment.artifact or experiment.dataset");
  }

  const LatentTable table = latent_positions(model);
  CsvWriter w(out_path(cfg, "latent.csv"));
  stamp(w, cfg);
  w.row({"combo", "z1", "z2"});
  for (Eigen::Index i = 0; i < table.Z.rows(); ++i)
    w.row({table.labels[static_cast<std::size_t>(i)], format_double(table.Z(i, 0)),
           format_double(table.Z(i, 1))});
  return 0;
}

int run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::Fit: return run_fit(cfg);
    case ExperimentKind::Predict: return run_predict(cfg);
    case ExperimentKind::LatentExport: return run_latent_export(cfg);
    case ExperimentKind::Sweep: return run_benchmark_sweep(cfg);
    case ExperimentKind::Varlen: return run_varlen_experiment(cfg);
    case ExperimentKind::Sensitivity: return run_sensitivity(cfg);
    case ExperimentKind::Bo: return run_bo_race(cfg);
  }
  throw ConfigError("unhandled experiment kind");
}

}  // namespace lmgp
