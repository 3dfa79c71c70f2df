#pragma once

#include <fstream>
#include <string>

#include "lmgp/bayesopt.hpp"
#include "lmgp/fit.hpp"
#include "lmgp/schema.hpp"

namespace lmgp {

// Dataset CSV: header x1..x{d_x},t1..t{d_t}[,y]; levels as 1-based integer
// indices, NaN levels as the literal `NaN`.
void write_dataset_csv(const std::string& path, const MixedDataset& data);

// Schema is inferred: m_i = max observed level (at least 2), nan_allowed
// where NaN appears, ranges from the data. Parse errors name the line.
MixedDataset read_dataset_csv(const std::string& path);

// Dataset CSV with responses, wrapped as a BO candidate pool.
CandidatePool load_candidate_csv(const std::string& path);

// Model artifact: self-describing JSON holding the fit configuration, the
// training data, and the fitted hyperparameters; loading rebuilds the
// factorization deterministically.
void save_model(const std::string& path, const FittedModel& model, const FitConfig& cfg);
FittedModel load_model(const std::string& path, FitConfig* cfg_out = nullptr);

// Formats doubles with round-trip precision (shortest representation).
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void comment(const std::string& text);            // "# text"
  void row(const std::vector<std::string>& cells);  // joined with commas
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

}  // namespace lmgp
