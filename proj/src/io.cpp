#include "lmgp/io.hpp"

#include <charconv>
#include "json.hpp"
#include <sstream>
#include <stdexcept>

namespace lmgp {

using nlohmann::json;

namespace {

constexpr const char* kModelFormat = "lmgp-model/1";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

[[noreturn]] void fail_at(const std::string& path, int line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::string kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::GP: return "GP";
    case ModelKind::LMGP: return "LMGP";
    case ModelKind::LVGP: return "LVGP";
  }
  return "?";
}

ModelKind kind_from(const std::string& s) {
  if (s == "GP") return ModelKind::GP;
  if (s == "LMGP") return ModelKind::LMGP;
  if (s == "LVGP") return ModelKind::LVGP;
  throw std::runtime_error("unknown model kind: " + s);
}

std::string prior_name(PriorStrategy p) {
  switch (p) {
    case PriorStrategy::OneHotGrouped: return "one-hot";
    case PriorStrategy::Random: return "random";
    case PriorStrategy::Lumped: return "lumped";
  }
  return "?";
}

PriorStrategy prior_from(const std::string& s) {
  if (s == "one-hot") return PriorStrategy::OneHotGrouped;
  if (s == "random") return PriorStrategy::Random;
  if (s == "lumped") return PriorStrategy::Lumped;
  throw std::runtime_error("unknown prior strategy: " + s);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf, ptr);
}

CsvWriter::CsvWriter(const std::string& path) : out_(path) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + path);
}

void CsvWriter::comment(const std::string& text) { out_ << "# " << text << "\n"; }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << "\n";
}

void write_dataset_csv(const std::string& path, const MixedDataset& data) {
  CsvWriter w(path);
  const std::size_t dx = data.dim_x(), dt = data.dim_t();
  const bool has_y = data.y.size() == static_cast<Eigen::Index>(data.size());
  std::vector<std::string> header;
  for (std::size_t j = 1; j <= dx; ++j) header.push_back("x" + std::to_string(j));
  for (std::size_t j = 1; j <= dt; ++j) header.push_back("t" + std::to_string(j));
  if (has_y) header.push_back("y");
  w.row(header);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<std::string> cells;
    for (std::size_t j = 0; j < dx; ++j)
      cells.push_back(format_double(data.samples[i].x[static_cast<Eigen::Index>(j)]));
    for (std::size_t j = 0; j < dt; ++j) {
      const int level = data.samples[i].t[j];
      cells.push_back(level == kLevelNaN ? "NaN" : std::to_string(level));
    }
    if (has_y) cells.push_back(format_double(data.y[static_cast<Eigen::Index>(i)]));
    w.row(cells);
  }
}

MixedDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);

  std::string line;
  int lineno = 0;
  // Header.
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] != '#') break;
  }
  if (line.empty()) throw std::runtime_error(path + ": empty file");
  const auto header = split_csv_line(line);
  std::size_t dx = 0, dt = 0;
  bool has_y = false;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& h = header[i];
    if (h == "y" && i + 1 == header.size()) {
      has_y = true;
    } else if (h.size() > 1 && h[0] == 'x' && dt == 0 && !has_y) {
      ++dx;
    } else if (h.size() > 1 && h[0] == 't' && !has_y) {
      ++dt;
    } else {
      fail_at(path, lineno, "unexpected header column '" + h + "'");
    }
  }

  MixedDataset data;
  std::vector<int> max_level(dt, 2);
  std::vector<bool> has_nan(dt, false);
  std::vector<double> ys;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != dx + dt + (has_y ? 1 : 0))
      fail_at(path, lineno, "expected " + std::to_string(dx + dt + (has_y ? 1 : 0)) +
                                " columns, found " + std::to_string(cells.size()));
    MixedSample s;
    s.x.resize(dx);
    try {
      for (std::size_t j = 0; j < dx; ++j) s.x[static_cast<Eigen::Index>(j)] = std::stod(cells[j]);
      s.t.resize(dt);
      for (std::size_t j = 0; j < dt; ++j) {
        const std::string& c = cells[dx + j];
        if (c == "NaN" || c == "nan") {
          s.t[j] = kLevelNaN;
          has_nan[j] = true;
        } else {
          s.t[j] = std::stoi(c);
          if (s.t[j] < 1) fail_at(path, lineno, "level indices are 1-based");
          max_level[j] = std::max(max_level[j], s.t[j]);
        }
      }
      if (has_y) ys.push_back(std::stod(cells[dx + dt]));
    } catch (const std::invalid_argument&) {
      fail_at(path, lineno, "malformed numeric cell");
    } catch (const std::out_of_range&) {
      fail_at(path, lineno, "numeric cell out of range");
    }
    data.samples.push_back(std::move(s));
  }

  std::vector<CategoricalVariable> vars;
  for (std::size_t j = 0; j < dt; ++j) {
    CategoricalVariable v;
    v.name = "t" + std::to_string(j + 1);
    for (int m = 1; m <= max_level[j]; ++m) v.levels.push_back(std::to_string(m));
    v.nan_allowed = has_nan[j];
    vars.push_back(std::move(v));
  }
  data.schema = CategoricalSchema(std::move(vars));
  if (has_y) data.y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  data.validate();
  return data;
}

CandidatePool load_candidate_csv(const std::string& path) {
  MixedDataset data = read_dataset_csv(path);
  if (data.y.size() != static_cast<Eigen::Index>(data.size()))
    throw std::runtime_error(path + ": candidate pool needs a y column");
  CandidatePool pool;
  pool.schema = data.schema;
  const Eigen::Index dx = static_cast<Eigen::Index>(data.dim_x());
  pool.x_lo = Eigen::VectorXd::Constant(dx, std::numeric_limits<double>::max());
  pool.x_hi = Eigen::VectorXd::Constant(dx, std::numeric_limits<double>::lowest());
  for (const auto& s : data.samples) {
    pool.x_lo = pool.x_lo.cwiseMin(s.x);
    pool.x_hi = pool.x_hi.cwiseMax(s.x);
  }
  for (Eigen::Index j = 0; j < dx; ++j)
    if (!(pool.x_lo[j] < pool.x_hi[j])) pool.x_hi[j] = pool.x_lo[j] + 1.0;
  pool.samples = std::move(data.samples);
  pool.responses = std::move(data.y);
  pool.evaluated.assign(pool.samples.size(), false);
  return pool;
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd mat_from_json(const json& rows) {
  const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index nc = nr ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  Eigen::MatrixXd m(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r)
    for (Eigen::Index c = 0; c < nc; ++c) m(r, c) = rows[r][c].get<double>();
  return m;
}

}  // namespace

void save_model(const std::string& path, const FittedModel& model, const FitConfig& cfg) {
  json j;
  j["format"] = kModelFormat;
  j["kind"] = kind_name(cfg.kind);
  j["prior"] = prior_name(cfg.prior);
  j["nan_fill"] = cfg.nan_fill == NanFill::Zero ? "zero" : "random";
  j["d_z"] = cfg.d_z;
  j["random_width"] = cfg.random_width;
  j["n_starts"] = cfg.n_starts;
  j["seed"] = cfg.seed;
  j["objective"] = model.objective;
  j["sigma2"] = model.sigma2;
  j["beta"] = vec_to_json(model.beta);

  json hy;
  hy["omega"] = vec_to_json(model.hypers.omega);
  hy["delta"] = model.hypers.delta;
  if (cfg.kind == ModelKind::LMGP) {
    hy["A"] = mat_to_json(model.hypers.map.A);
  } else if (cfg.kind == ModelKind::LVGP) {
    json pts = json::array();
    for (const auto& P : model.hypers.map.points) pts.push_back(mat_to_json(P));
    hy["points"] = std::move(pts);
  }
  j["hypers"] = std::move(hy);

  json schema = json::array();
  for (std::size_t v = 0; v < model.train.schema.count(); ++v) {
    const auto& var = model.train.schema.variable(v);
    schema.push_back({{"name", var.name}, {"levels", var.levels},
                      {"nan_allowed", var.nan_allowed}});
  }
  j["schema"] = std::move(schema);

  json train;
  train["x_lo"] = vec_to_json(model.train.x_lo);
  train["x_hi"] = vec_to_json(model.train.x_hi);
  json xs = json::array(), ts = json::array();
  for (const auto& s : model.train.samples) {
    xs.push_back(vec_to_json(s.x));
    ts.push_back(s.t);
  }
  train["x"] = std::move(xs);
  train["t"] = std::move(ts);
  train["y"] = vec_to_json(model.train.y);
  j["train"] = std::move(train);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(1) << "\n";
}

FittedModel load_model(const std::string& path, FitConfig* cfg_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": not a model artifact (" + e.what() + ")");
  }
  if (!j.contains("format") || j["format"] != kModelFormat)
    throw std::runtime_error(path + ": unsupported artifact format (expected " +
                             std::string(kModelFormat) + ")");

  FitConfig cfg;
  cfg.kind = kind_from(j["kind"].get<std::string>());
  cfg.prior = prior_from(j["prior"].get<std::string>());
  cfg.nan_fill = j["nan_fill"] == "random" ? NanFill::Random : NanFill::Zero;
  cfg.d_z = j["d_z"].get<int>();
  cfg.random_width = j["random_width"].get<int>();
  cfg.n_starts = j["n_starts"].get<int>();
  cfg.seed = j["seed"].get<std::uint64_t>();

  MixedDataset data;
  std::vector<CategoricalVariable> vars;
  for (const auto& sv : j["schema"]) {
    CategoricalVariable v;
    v.name = sv["name"].get<std::string>();
    v.levels = sv["levels"].get<std::vector<std::string>>();
    v.nan_allowed = sv["nan_allowed"].get<bool>();
    vars.push_back(std::move(v));
  }
  data.schema = CategoricalSchema(std::move(vars));
  data.x_lo = vec_from_json(j["train"]["x_lo"]);
  data.x_hi = vec_from_json(j["train"]["x_hi"]);
  const auto& xs = j["train"]["x"];
  const auto& ts = j["train"]["t"];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    MixedSample s;
    s.x = vec_from_json(xs[i]);
    s.t = ts[i].get<std::vector<int>>();
    data.samples.push_back(std::move(s));
  }
  data.y = vec_from_json(j["train"]["y"]);

  Hyperparameters hy;
  hy.omega = vec_from_json(j["hypers"]["omega"]);
  hy.delta = j["hypers"]["delta"].get<double>();
  if (cfg.kind == ModelKind::LMGP) {
    hy.map.kind = LatentMap::Kind::LMGP;
    hy.map.d_z = cfg.d_z;
    hy.map.A = mat_from_json(j["hypers"]["A"]);
  } else if (cfg.kind == ModelKind::LVGP) {
    hy.map.kind = LatentMap::Kind::LVGP;
    hy.map.d_z = cfg.d_z;
    for (const auto& P : j["hypers"]["points"]) hy.map.points.push_back(mat_from_json(P));
  }

  FitProblem problem(data, cfg);
  FittedModel model = problem.finalize(problem.pack(hy));
  if (cfg_out) *cfg_out = cfg;
  return model;
}

}  // namespace lmgp
