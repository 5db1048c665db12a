#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "tdbsde/fbsde.hpp"
#include "tdbsde/harness.hpp"

namespace tdbsde::cli {

json to_json(const ContractionReport& r);
json to_json(const PicardTrace& t);
json to_json(const Estimate& e);
json to_json(const std::vector<AssumptionResult>& results);
json to_json(const SkorokhodAudit& a);
json to_json(const BmoReport& b);

void write_json(const std::filesystem::path& file, const json& j);

/// Comma-separated, header row first, doubles with 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header);

  template <class... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((emit(values, first)), ...);
    out_ << '\n';
  }

 private:
  template <class T>
  void emit(const T& v, bool& first) {
    if (!first) out_ << ',';
    first = false;
    out_ << v;
  }

  std::ofstream out_;
};

struct ExtraSeries {
  std::string name;
  const Eigen::MatrixXd* values;  // M x (N+1)
};

/// Long-format dump: path,timeIndex,series,component,value.
void write_ensemble_csv(const std::filesystem::path& file, const Ensemble& e,
                        const std::vector<ExtraSeries>& extra = {});

/// Per-node path averages: timeIndex,t,series,component,mean,stderr.
void write_node_means_csv(const std::filesystem::path& file, const Ensemble& e,
                          const std::vector<ExtraSeries>& extra = {});

}  // namespace tdbsde::cli
