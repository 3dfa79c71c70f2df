#include "lmgp/schema.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

namespace lmgp {

CategoricalSchema::CategoricalSchema(std::vector<CategoricalVariable> vars)
    : vars_(std::move(vars)) {
  for (const auto& v : vars_) {
    if (v.levels.size() < 2)
      throw std::invalid_argument("categorical variable '" + v.name + "' needs >= 2 levels");
    std::set<std::string> seen(v.levels.begin(), v.levels.end());
    if (seen.size() != v.levels.size())
      throw std::invalid_argument("duplicate level label in variable '" + v.name + "'");
  }
}

int CategoricalSchema::total_levels() const {
  int total = 0;
  for (const auto& v : vars_) total += static_cast<int>(v.levels.size());
  return total;
}

long CategoricalSchema::combo_count() const {
  long b = 1;
  for (const auto& v : vars_) b *= static_cast<long>(v.levels.size());
  return b;
}

long CategoricalSchema::combo_row(const std::vector<int>& combo) const {
  validate_combo(combo);
  long row = 0;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (combo[i] == kLevelNaN)
      throw std::invalid_argument("combo with NaN level has no dense row index");
    row = row * levels(i) + (combo[i] - 1);
  }
  return row;
}

std::vector<int> CategoricalSchema::combo_from_row(long row) const {
  if (row < 0 || row >= combo_count()) throw std::invalid_argument("combo row out of range");
  std::vector<int> combo(vars_.size());
  for (std::size_t i = vars_.size(); i-- > 0;) {
    combo[i] = static_cast<int>(row % levels(i)) + 1;
    row /= levels(i);
  }
  return combo;
}

void CategoricalSchema::validate_combo(const std::vector<int>& combo) const {
  if (combo.size() != vars_.size())
    throw std::invalid_argument("combo length does not match schema");
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (combo[i] == kLevelNaN) {
      if (!vars_[i].nan_allowed)
        throw std::invalid_argument("NaN level on variable '" + vars_[i].name +
                                    "' which does not allow it");
      continue;
    }
    if (combo[i] < 1 || combo[i] > levels(i))
      throw std::invalid_argument("level " + std::to_string(combo[i]) +
                                  " out of range for variable '" + vars_[i].name + "'");
  }
}

std::string CategoricalSchema::combo_label(const std::vector<int>& combo) const {
  validate_combo(combo);
  std::ostringstream out;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (i) out << '/';
    if (combo[i] == kLevelNaN)
      out << "NaN";
    else
      out << vars_[i].levels[combo[i] - 1];
  }
  return out.str();
}

bool CategoricalSchema::operator==(const CategoricalSchema& other) const {
  if (vars_.size() != other.vars_.size()) return false;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].name != other.vars_[i].name || vars_[i].levels != other.vars_[i].levels ||
        vars_[i].nan_allowed != other.vars_[i].nan_allowed)
      return false;
  }
  return true;
}

CategoricalSchema make_schema(const std::vector<int>& level_counts) {
  std::vector<CategoricalVariable> vars;
  vars.reserve(level_counts.size());
  for (std::size_t i = 0; i < level_counts.size(); ++i) {
    CategoricalVariable v;
    v.name = "t" + std::to_string(i + 1);
    for (int m = 1; m <= level_counts[i]; ++m) v.levels.push_back(std::to_string(m));
    vars.push_back(std::move(v));
  }
  return CategoricalSchema(std::move(vars));
}

void MixedDataset::validate() const {
  const auto n = samples.size();
  if (static_cast<Eigen::Index>(n) != y.size() && y.size() != 0)
    throw std::invalid_argument("sample count and response count differ");
  if (y.size() != 0 && n < 2) throw std::invalid_argument("need at least 2 samples");
  const auto dx = dim_x();
  for (const auto& s : samples) {
    if (static_cast<std::size_t>(s.x.size()) != dx)
      throw std::invalid_argument("inconsistent quantitative dimension");
    schema.validate_combo(s.t);
  }
  if (x_lo.size() != x_hi.size())
    throw std::invalid_argument("range bounds have mismatched lengths");
  if (x_lo.size() != 0 && static_cast<std::size_t>(x_lo.size()) != dx)
    throw std::invalid_argument("range bounds do not match quantitative dimension");
  for (Eigen::Index j = 0; j < x_lo.size(); ++j)
    if (!(x_lo[j] < x_hi[j])) throw std::invalid_argument("empty range for quantitative input");
}

}  // namespace lmgp
