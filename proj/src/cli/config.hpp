#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tdbsde/analysis.hpp"
#include "tdbsde/reflect.hpp"
#include "tdbsde/solver.hpp"

namespace tdbsde::cli {

using json = nlohmann::ordered_json;

struct FamilyMember {
  int n = 0;
  MeasureSpec alpha1;
  MeasureSpec alpha2;
};

/// A parsed, validated experiment. `echo` is the same configuration with
/// every default filled in; feeding it back reproduces the run.
struct ExperimentConfig {
  explicit ExperimentConfig(DelayedProblem p) : problem(std::move(p)) {}

  std::string command;
  DelayedProblem problem;
  SolveOptions solver;
  Barrier barrier;
  Variant variant = Variant::plain;
  double clamp = 1e3;
  // stability-sweep: "scaled" uses (1 - 1/n) alpha_i; "explicit" lists members.
  std::string family_kind = "scaled";
  std::vector<int> family_n;
  std::vector<FamilyMember> family_members;
  std::vector<int> refine_n;
  std::vector<Index> refine_m;
  int replications = 1;
  json echo;
};

ExperimentConfig parse_config(const std::string& command, const json& raw,
                              std::optional<std::uint64_t> seed_override);

// Reads and parses a config file; an absent path means all defaults.
ExperimentConfig load_config(const std::string& command,
                             const std::optional<std::filesystem::path>& file,
                             std::optional<std::uint64_t> seed_override);

}  // namespace tdbsde::cli
