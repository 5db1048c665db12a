#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tdbsde::cli {

enum ExitCode : int {
  kOk = 0,
  kGateRefusal = 2,
  kNumericalFailure = 3,
  kConfigError = 4,
};

inline constexpr const char* kSchema = "tdbsde/1";

struct RunFlags {
  std::optional<std::filesystem::path> config;
  std::filesystem::path out = "out";
  unsigned threads = 0;  // 0 = all cores
  std::optional<std::uint64_t> seed;
  bool dump_ensemble = false;
};

std::vector<std::string> subcommands();

/// Runs one subcommand and writes its outputs below flags.out. Errors are
/// reported on stderr and mapped to an ExitCode.
int run(const std::string& subcommand, const RunFlags& flags);

/// argv front end.
int main(int argc, char** argv);

}  // namespace tdbsde::cli
