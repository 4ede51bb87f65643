// scenario.hpp — configuration ingestion, scenario dispatch, and report
// emission. Configs are JSON with nested model/problem/output sections and
// complex numbers as [re, im] pairs. The run report is a deterministic JSON
// document (identical inputs give byte-identical reports); wall time goes to
// a separate metadata file so timing never perturbs the report bytes.

#pragma once

#include "octl/equivalence.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>

namespace octl {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// CLI exit codes (also returned by run_scenario_file).
enum ExitCode {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitNonConverged = 3,
  kExitCheckFailed = 4,
};

struct ProblemConfig {
  std::string kind;  // op|np|tp|tocp|nocp|m_tau|verify-1.2|verify-1.3|verify-reversal|map
  CVec y0;
  CVec z_d;
  double M = 0.0;
  double tau = 0.0;
  double r = 0.0;
  double horizon = 0.0;            // target horizon for nocp
  std::string case_name = "i";     // verify-1.3
  std::string map_kind = "r_of_M";
  std::vector<double> grid;
  double check_tolerance = 1e-3;
};

struct OutputConfig {
  std::string dir = ".";
  bool json = true;
  bool csv = true;
};

struct ScenarioConfig {
  std::string id = "scenario";
  ModelConfig model;
  ProblemConfig problem;
  OutputConfig output;
  std::uint64_t seed = 1;
};

ScenarioConfig parse_scenario(const nlohmann::json& document);
nlohmann::json emit_scenario(const ScenarioConfig& config);

struct RunReport {
  nlohmann::json document;         // deterministic payload
  double wall_time_seconds = 0.0;  // metadata only
  int exit_code = kExitOk;
};

// Executes one scenario in process. Parallelism caps concurrent map-point
// evaluation (0 picks the OCTL_THREADS environment value or the hardware
// concurrency).
RunReport run_scenario(const ScenarioConfig& config, int parallelism = 0);

// File-level driver used by the CLI: load config, apply key=value overrides
// (dotted paths into the JSON document), run, write report/CSV/metadata under
// the output directory. Returns the exit code; never throws.
int run_scenario_file(const std::string& config_path,
                      const std::vector<std::string>& overrides,
                      const std::string& out_dir_override,
                      std::ostream& log);

void emit_map_csv(const MapSample& sample, const std::string& path);

}  // namespace octl
