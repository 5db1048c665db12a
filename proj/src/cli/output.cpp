#include "output.hpp"

#include <iomanip>
#include <limits>

namespace tdbsde::cli {

json to_json(const ContractionReport& r) {
  return {{"variant", r.variant == Variant::plain ? "plain" : "reflected"},
          {"lhsY", r.lhs_y},
          {"lhsZ", r.lhs_z},
          {"threshold", r.threshold},
          {"satisfied", r.satisfied},
          {"modulus", r.modulus},
          {"warnings", r.warnings}};
}

json to_json(const PicardTrace& t) {
  json it = json::array();
  for (const auto& i : t.iterations)
    it.push_back({{"k", i.k}, {"diffS2sq", i.diff_s2sq}, {"diffH2sq", i.diff_h2sq}});
  return {{"converged", t.converged},
          {"iterations", t.iteration_count()},
          {"trace", it},
          {"ratios", t.ratios()}};
}

json to_json(const Estimate& e) { return {{"estimate", e.value}, {"stderr", e.std_error}}; }

json to_json(const std::vector<AssumptionResult>& results) {
  json out = json::array();
  for (const auto& r : results)
    out.push_back({{"id", r.id}, {"verdict", to_string(r.verdict)}, {"message", r.message}});
  return out;
}

json to_json(const SkorokhodAudit& a) {
  return {{"maxSum", a.max_sum},
          {"minGap", a.min_gap},
          {"minIncrement", a.min_increment},
          {"tolerance", kSkorokhodTolerance},
          {"passed", a.passed}};
}

json to_json(const BmoReport& b) {
  return {{"bmoSq", b.bmo_sq}, {"zInfty", b.z_infty}, {"nodeMean", b.node_mean}, {"nodeMax", b.node_max}};
}

void write_json(const std::filesystem::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

CsvWriter::CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header)
    : out_(file) {
  if (!out_) throw Error("cannot write " + file.string());
  out_ << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
  out_ << '\n';
}

namespace {

struct Series {
  std::string name;
  const std::vector<Eigen::MatrixXd>* slices = nullptr;
  const Eigen::MatrixXd* columns = nullptr;

  int nodes() const {
    return slices ? static_cast<int>(slices->size()) : static_cast<int>(columns->cols());
  }
  Index components() const { return slices ? slices->front().cols() : 1; }
  double at(Index p, int i, Index c) const {
    return slices ? (*slices)[static_cast<std::size_t>(i)](p, c) : (*columns)(p, i);
  }
};

std::vector<Series> collect(const Ensemble& e, const std::vector<ExtraSeries>& extra) {
  std::vector<Series> s{{"W", &e.paths->W, nullptr}, {"Y", &e.Y, nullptr}, {"Z", &e.Z, nullptr}};
  if (e.has_forward()) s.push_back({"X", &e.X, nullptr});
  for (const auto& x : extra) s.push_back({x.name, nullptr, x.values});
  return s;
}

}  // namespace

void write_ensemble_csv(const std::filesystem::path& file, const Ensemble& e,
                        const std::vector<ExtraSeries>& extra) {
  CsvWriter csv(file, {"path", "timeIndex", "series", "component", "value"});
  const auto series = collect(e, extra);
  for (Index p = 0; p < e.path_count(); ++p)
    for (const auto& s : series)
      for (int i = 0; i < s.nodes(); ++i)
        for (Index c = 0; c < s.components(); ++c) csv.row(p, i, s.name, c, s.at(p, i, c));
}

void write_node_means_csv(const std::filesystem::path& file, const Ensemble& e,
                          const std::vector<ExtraSeries>& extra) {
  CsvWriter csv(file, {"timeIndex", "t", "series", "component", "mean", "stderr"});
  const auto series = collect(e, extra);
  const Index rows = e.path_count();
  for (const auto& s : series) {
    if (s.name == "W") continue;
    for (int i = 0; i < s.nodes(); ++i)
      for (Index c = 0; c < s.components(); ++c) {
        Eigen::VectorXd v(rows);
        for (Index p = 0; p < rows; ++p) v(p) = s.at(p, i, c);
        const Estimate est = mean_estimate<double>(v);
        csv.row(i, e.grid().node(i), s.name, c, est.value, est.std_error);
      }
  }
}

}  // namespace tdbsde::cli
