#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/config.hpp"
#include "tdbsde/cli.hpp"

using namespace tdbsde;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("tdbsde_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write(const fs::path& file, const json& j) {
  std::ofstream(file) << j.dump(2);
  return file;
}

json read(const fs::path& file) {
  std::ifstream in(file);
  return json::parse(in);
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

cli::RunFlags flags(const fs::path& out, std::optional<fs::path> config = std::nullopt) {
  cli::RunFlags f;
  f.out = out;
  f.config = std::move(config);
  f.threads = 1;
  return f;
}

}  // namespace

TEST_CASE("counterexample subcommand") {
  TempDir dir("counterexample");
  const auto cfg = write(dir.path / "c.json",
                         {{"problem", {{"grid", {{"N", 50}}}}}, {"solver", {{"paths", 2000}}}});
  const auto out = dir.path / "out";
  REQUIRE(cli::run("counterexample", flags(out, cfg)) == cli::kOk);
  const json s = read(out / "summary.json");
  CHECK(s["status"] == "ok");
  const double y0 = s["y0"]["estimate"].get<double>();
  CHECK(y0 >= 0.808);
  CHECK(y0 <= 0.829);
  CHECK(fs::exists(out / "results.csv"));
  CHECK(slurp(out / "results.csv").rfind("timeIndex,t,Y,exact,Ybar\n", 0) == 0);
}

TEST_CASE("check-contraction reports the boundary") {
  TempDir dir("check");
  REQUIRE(cli::run("check-contraction", flags(dir.path)) == cli::kOk);
  const json s = read(dir.path / "summary.json");
  const auto& c = s["contraction"];
  CHECK(std::abs(c["lhsY"].get<double>() - 0.04) <= 1e-15);
  CHECK(c["satisfied"] == true);
  CHECK_FALSE(c["warnings"].empty());
}

TEST_CASE("infinite horizon is a config error") {
  TempDir dir("inf");
  const auto cfg = write(dir.path / "c.json", {{"problem", {{"grid", {{"T", "inf"}}}}}});
  CHECK(cli::run("solve", flags(dir.path / "out", cfg)) == cli::kConfigError);
  try {
    cli::parse_config("solve", read(cfg), std::nullopt);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("infinite horizon") != std::string::npos);
    CHECK(e.path() == "problem.grid.T");
  }
}

TEST_CASE("unknown keys name their path") {
  const json raw = {{"problem", {{"generator", {{"preset", "linear"}, {"Kay", 1.0}}}}}};
  try {
    cli::parse_config("solve", raw, std::nullopt);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "problem.generator.Kay");
  }
  const json params = {{"problem", {{"generator", {{"preset", "linear"}, {"params", {{"q", 1.0}}}}}}}};
  try {
    cli::parse_config("solve", params, std::nullopt);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "problem.generator.params");
  }
  TempDir dir("unknown");
  const auto cfg = write(dir.path / "c.json", {{"solverr", json::object()}});
  CHECK(cli::run("solve", flags(dir.path / "out", cfg)) == cli::kConfigError);
}

TEST_CASE("other config errors") {
  CHECK_THROWS_AS(cli::parse_config("solve", {{"problem", {{"measures", {{"alpha1", {{"dirac", 0.5}}}}}}}},
                                    std::nullopt),
                  ConfigError);
  CHECK_THROWS_AS(cli::parse_config("solve", {{"problem", {{"generator", {{"preset", "linear"}, {"params", {{"a", 0.3}}}, {"K", 0.1}}}}}},
                                    std::nullopt),
                  ConfigError);
  CHECK_THROWS_AS(cli::parse_config("solve", {{"schema", "other"}}, std::nullopt), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("solve", {{"solver", {{"paths", 0}}}}, std::nullopt), ConfigError);
  TempDir dir("missing");
  CHECK(cli::run("solve", flags(dir.path / "out", dir.path / "absent.json")) == cli::kConfigError);
  CHECK(cli::run("bogus", flags(dir.path / "out")) == cli::kConfigError);
}

TEST_CASE("echoed config reproduces the run bit for bit") {
  TempDir dir("echo");
  const auto cfg = write(dir.path / "c.json",
                         {{"problem",
                           {{"grid", {{"T", 1.0}, {"N", 20}}},
                            {"generator", {{"preset", "linear"}, {"params", {{"a", 0.1}, {"b", 0.1}}}}},
                            {"terminal", {{"preset", "tanh"}}}}},
                          {"solver", {{"paths", 3000}, {"seed", 9}}}});
  auto f1 = flags(dir.path / "a", cfg);
  f1.dump_ensemble = true;
  REQUIRE(cli::run("solve", f1) == cli::kOk);
  const json s1 = read(dir.path / "a" / "summary.json");
  const auto echo = write(dir.path / "echo.json", s1["config"]);
  auto f2 = flags(dir.path / "b", echo);
  f2.dump_ensemble = true;
  REQUIRE(cli::run("solve", f2) == cli::kOk);
  const json s2 = read(dir.path / "b" / "summary.json");
  CHECK(s1.dump() == s2.dump());
  for (const char* f : {"results.csv", "ensemble.csv", "stencil_alpha1.csv"})
    CHECK_MESSAGE(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f), f);
  CHECK(slurp(dir.path / "a" / "ensemble.csv").rfind("path,timeIndex,series,component,value\n", 0) == 0);

  // Everything lands inside the output directory.
  for (const auto& e : fs::directory_iterator(dir.path))
    CHECK((e.path().filename() == "a" || e.path().filename() == "b" || e.path().extension() == ".json"));
}

TEST_CASE("seed flag overrides the config") {
  const auto a = cli::parse_config("solve", json::object(), 77u);
  CHECK(a.solver.rng.seed == 77u);
  CHECK(a.echo["solver"]["seed"] == 77u);
}

TEST_CASE("gate refusal exits 2 and still writes a summary") {
  TempDir dir("refuse");
  const auto cfg = write(dir.path / "c.json",
                         {{"problem", {{"generator", {{"preset", "linear"}, {"params", {{"a", 0.5}}}}}}},
                          {"solver", {{"paths", 100}}}});
  CHECK(cli::run("solve", flags(dir.path / "out", cfg)) == cli::kGateRefusal);
  const json s = read(dir.path / "out" / "summary.json");
  CHECK(s["status"] == "refused");
  CHECK(s["contraction"]["satisfied"] == false);
}

TEST_CASE("numerical failure exits 3") {
  TempDir dir("diverge");
  const auto cfg = write(dir.path / "c.json",
                         {{"problem",
                           {{"grid", {{"T", 6.0}, {"N", 60}}},
                            {"generator", {{"preset", "linear"}, {"params", {{"a", 1.0}}}}}}},
                          {"solver", {{"paths", 100}}}});
  CHECK(cli::run("solve-fbsde", flags(dir.path / "out", cfg)) == cli::kNumericalFailure);
}

TEST_CASE("every subcommand runs on a small config") {
  TempDir dir("all");
  // K = 0.1 keeps both the plain and the reflected gate open.
  const json small = {{"problem",
                       {{"grid", {{"N", 10}}},
                        {"generator", {{"preset", "linear"}, {"params", {{"a", 0.1}, {"b", 0.1}}}}}}},
                      {"solver", {{"paths", 500}}},
                      {"family", {{"n", {2, 4}}}},
                      {"refine", {{"N", {5, 10}}, {"M", {200, 400}}, {"replications", 2}}}};
  const auto cfg = write(dir.path / "c.json", small);
  for (const auto& sub : cli::subcommands()) {
    const auto out = dir.path / sub;
    CHECK_MESSAGE(cli::run(sub, flags(out, cfg)) == cli::kOk, sub);
    CHECK_MESSAGE(fs::exists(out / "summary.json"), sub);
  }
}
