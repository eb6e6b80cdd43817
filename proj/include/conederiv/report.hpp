#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "conederiv/estimators.hpp"
#include "conederiv/json_io.hpp"
#include "conederiv/paths.hpp"
#include "conederiv/sampling.hpp"

namespace conederiv {

inline constexpr const char* kVersion = "0.1.0";

/// One runnable experiment. `target` is a fixture name for estimate/path and a chain case name for chain.
struct ExperimentConfig {
  std::string name;
  std::string kind;
  std::string target;
  /// tangential | directional | cone_growth | two_point | profile (estimate only).
  std::string estimator = "tangential";
  /// Overrides the fixture's own expectation.
  std::optional<Json> expect;
  /// Inline path for kind "path".
  std::optional<Json> path;
  ScaleSchedule schedule;
  EstimatorOptions options;
};

struct SuiteConfig {
  std::string kind;
  std::vector<ExperimentConfig> experiments;
  std::uint64_t seed = 0;
  std::string output = "report.json";
  /// The config as read, with command-line overrides folded in.
  Json raw;
};

/// Command-line values that take precedence over the config file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> delta0, theta0, rho, tol_abs;
  std::optional<int> levels;
};

/// Throws ConfigError on schema violations, unknown fixtures or an invalid schedule.
SuiteConfig parse_config(const Json& j, const ConfigOverrides& over = {},
                         const std::filesystem::path& base_dir = {});
SuiteConfig load_config(const std::filesystem::path& file, const ConfigOverrides& over = {});

/// Config object for the full suite: both estimators on every fixture, growth on the
/// kernel fixtures, and every chain case.
Json default_suite_json();

struct CurveRow {
  int level;
  double delta;
  double theta;
  std::optional<double> residual;
  std::optional<double> growth;
};

struct ExperimentResult {
  std::string name;
  std::string kind;
  std::string target;
  std::string estimator;
  std::optional<std::string> expected;
  std::string observed;
  bool passed = false;
  std::string error;
  Json result;
  Json settings;
  std::vector<CurveRow> curves;
  double wall_clock_ms = 0.0;
};

struct SuiteReport {
  Json config;
  std::uint64_t seed = 0;
  std::vector<ExperimentResult> entries;

  bool all_passed() const;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);
/// Runs experiments on up to `workers` threads; entries keep config order.
SuiteReport run_suite(const SuiteConfig& cfg, int workers);

Json report_to_json(const SuiteReport& r, bool wall_clock = true);
/// Writes to a sibling temp file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string sanitize_name(const std::string& name);

/// One CSV per entry with curves; returns the files written. Warns on `warn` when there is nothing to write.
std::vector<std::filesystem::path> emit_curves(const SuiteReport& r, const std::filesystem::path& dir,
                                               std::ostream& warn);

/// Evaluation table "t,x1..xm,dx1..dxm" on `samples` points spanning [0, t_0].
std::string path_table_csv(const PiecewisePath& p, int samples);

/// Worker cap from CONEDERIV_THREADS (unset or 0 means hardware concurrency).
int worker_count_from_env();

/// Exit codes of run_config.
enum ExitCode : int { kExitOk = 0, kExitFailed = 1, kExitUsage = 2 };

/// Runs a parsed config, writes the report (and curves) under `out_dir`, prints a summary.
int run_and_write(const SuiteConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out,
                  std::ostream& err);
/// load_config + run_and_write; config errors return kExitUsage.
int run_config(const std::filesystem::path& file, const ConfigOverrides& over,
               const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

}  // namespace conederiv
