#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "anosov/foliation_metric.hpp"

namespace anosov {

struct FixtureConfig {
  std::string name = "linear_A0";
  double epsilon = 0.0;
  std::vector<std::vector<std::int64_t>> matrix;  ///< custom maps only
  std::vector<TrigTerm> terms;                     ///< custom maps only
};

struct ToleranceConfig {
  double rigidity = 5e-4;
  double spread = 1e-3;
  double specialness = 1e-4;
  double conjugacy_tail = 1e-10;
  double inverse = 1e-10;
  double obstruction = 1e-4;
};

struct DepthConfig {
  int series = 0;  ///< 0 derives the depth from the tail bound
  int branch = 12;
  int max_period = 6;
  int fourier_order = 0;  ///< 0 picks a default by dimension
  int splitting = 24;
  int decay_m = 8;
  int certify_iterations = 3;
  int obstruction_period = 4;
};

struct SamplingConfig {
  int residual = 200;
  int round_trip = 50;
  int defect = 200;
  int decay = 32;
  bool decay_inverse = true;
  int branch_points = 50;
  int branch_codes = 8;
  int affinity_leaves = 25;
  int affinity_pairs = 4;
  int holonomy_pairs = 20;
  int isometry_pairs = 100;
  int covering_k = 8;
  int covering_grid = 64;
  int certify_grid = 0;
  double cone_slope = 1.0;
  int orbit_average_length = 4000;
};

struct DichotomyConfig {
  std::string family;
  std::vector<double> epsilons;
};

struct Scenario {
  FixtureConfig fixture;
  std::vector<std::string> stages{"analyze", "certify", "conjugacy", "orbits", "branches", "metric"};
  ToleranceConfig tolerances;
  DepthConfig depths;
  SamplingConfig sampling;
  std::uint64_t seed = 1;
  std::string output_dir = "anosov_out";
  std::string cache_dir;  ///< empty disables caching unless ANOSOV_CACHE_DIR is set
  std::optional<DichotomyConfig> dichotomy;
};

/// Parse a JSON scenario; unknown keys and wrong types raise ConfigInvalid naming the field.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);
/// Canonical JSON (sorted keys, fixed number format) of the full scenario.
std::string canonical_config(const Scenario& scenario);

TorusMap build_map(const FixtureConfig& fixture);

const std::vector<std::string>& stage_names();

struct RunReport {
  int exit_code = 0;  ///< 0 success, 2 verdict-level findings, 1 errors
  std::vector<std::pair<std::string, std::string>> summary;
  std::vector<std::string> findings;
  std::vector<std::string> files;
  std::string error;
  int cache_hits = 0;
};

/// Runs the requested stages (empty means the stages listed in the scenario) and writes
/// CSV files, summary.txt and metadata.txt into scenario.output_dir.
RunReport run_scenario(const Scenario& scenario, const std::vector<std::string>& stages = {});

struct DichotomyRow {
  double epsilon = 0.0;
  double specialness_defect = 0.0;  ///< relative to sup |u|
  double max_spread = 0.0;
  double rigidity_deviation = 0.0;
  bool special = false;
  bool integrable = false;
  bool rigid = false;
  bool agreement = false;
  std::string error;
};

struct DichotomyReport {
  std::string family;
  bool irreducible = true;
  bool invertible = false;  ///< |det A| = 1: rigidity is excluded from the agreement rule
  std::vector<DichotomyRow> rows;
  bool all_agree = true;
  bool co_increasing = true;  ///< all three diagnostics non-decreasing in epsilon
};

DichotomyReport dichotomy_sweep(const std::string& family, const std::vector<double>& epsilons,
                                const Scenario& scenario);

std::uint64_t fnv1a64(const std::string& bytes);

/// ANOSOV_CACHE_DIR when set, otherwise scenario.cache_dir.
std::string cache_directory(const Scenario& scenario);

}  // namespace anosov
