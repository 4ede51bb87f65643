#include "octl/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <thread>

namespace octl {

using nlohmann::json;

namespace {

const std::vector<std::string> kProblemKinds = {
    "op",   "np",         "tp",         "tocp",            "nocp",
    "m_tau", "verify-1.2", "verify-1.3", "verify-reversal", "map"};

void reject_unknown_keys(const json& section, const std::string& name,
                         std::initializer_list<const char*> known) {
  for (const auto& item : section.items()) {
    bool ok = false;
    for (const char* key : known) {
      if (item.key() == key) { ok = true; break; }
    }
    if (!ok) throw ConfigError("unknown key '" + name + "." + item.key() + "'");
  }
}

double require_number(const json& section, const std::string& name,
                      const char* key) {
  if (!section.contains(key) || !section[key].is_number()) {
    throw ConfigError("missing or non-numeric field '" + name + "." + key + "'");
  }
  return section[key].get<double>();
}

CVec parse_complex_vector(const json& value, const std::string& field) {
  if (!value.is_array()) {
    throw ConfigError("field '" + field + "' must be a list of [re, im] pairs");
  }
  CVec out(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    const json& pair = value[i];
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
        !pair[1].is_number()) {
      throw ConfigError("field '" + field + "' entry " + std::to_string(i) +
                        " must be an [re, im] pair");
    }
    out[i] = Complex(pair[0].get<double>(), pair[1].get<double>());
  }
  return out;
}

json emit_complex_vector(const CVec& value) {
  json out = json::array();
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    out.push_back({value[i].real(), value[i].imag()});
  }
  return out;
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

json value_map_payload(const ValueMapResult& result) {
  json payload;
  payload["value"] = result.value;
  payload["bracket"] = {result.lo, result.hi};
  payload["probe_count"] = result.probe_count;
  payload["warning"] = result.warning;
  if (!result.note.empty()) payload["note"] = result.note;
  if (result.attaining_control.model) {
    payload["attaining_control_sup_norm"] = result.attaining_control.sup_norm();
    payload["attaining_control_activation"] =
        result.attaining_control.activation_time;
  }
  return payload;
}

json op_payload(const OpSolution& solution) {
  json payload;
  payload["r_value"] = solution.r_value;
  payload["fw_gap"] = solution.fw_gap;
  payload["bang_bang_deviation"] = solution.bang_bang_deviation;
  payload["max_principle_residual"] = solution.max_principle_residual;
  payload["iterations"] = solution.iterations;
  payload["converged"] = solution.converged;
  payload["control_sup_norm"] = solution.control.sup_norm();
  return payload;
}

json report_payload(const EquivalenceReport& report) {
  json checks = json::array();
  for (const CheckEntry& entry : report.checks) {
    checks.push_back({{"name", entry.name},
                      {"residual", entry.residual},
                      {"tolerance", entry.tolerance},
                      {"pass", entry.pass}});
  }
  json distances = json::array();
  for (const ControlDistanceEntry& entry : report.control_distances) {
    distances.push_back({{"pair", entry.pair}, {"distance", entry.distance}});
  }
  json parameters;
  for (const auto& [key, value] : report.parameters) parameters[key] = value;
  return json{{"scenario_id", report.scenario_id},
              {"checks", checks},
              {"control_distances", distances},
              {"parameters", parameters},
              {"all_pass", report.all_pass()}};
}

json map_payload(const MapSample& sample) {
  return json{{"kind", to_string(sample.kind)},
              {"grid", sample.grid},
              {"values", sample.values},
              {"status", sample.status}};
}

int env_parallelism() {
  if (const char* env = std::getenv("OCTL_THREADS")) {
    const int value = std::atoi(env);
    if (value > 0) return value;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

ScenarioConfig parse_scenario(const json& document) {
  if (!document.is_object()) throw ConfigError("config root must be an object");
  reject_unknown_keys(document, "", {"id", "model", "problem", "output", "seed"});
  ScenarioConfig config;
  if (document.contains("id")) config.id = document["id"].get<std::string>();
  if (document.contains("seed")) config.seed = document["seed"].get<std::uint64_t>();

  if (!document.contains("model")) throw ConfigError("missing 'model' section");
  const json& model = document["model"];
  reject_unknown_keys(model, "model",
                      {"domain_length", "num_modes", "omega", "horizon",
                       "num_time_intervals", "reach_tolerance",
                       "bisection_tolerance", "fw_gap_tolerance",
                       "max_fw_iterations", "vertex_threshold"});
  ModelConfig& m = config.model;
  if (model.contains("domain_length")) m.domain_length = require_number(model, "model", "domain_length");
  if (model.contains("num_modes")) m.num_modes = model["num_modes"].get<int>();
  if (model.contains("horizon")) m.horizon = require_number(model, "model", "horizon");
  if (model.contains("num_time_intervals")) m.num_time_intervals = model["num_time_intervals"].get<int>();
  if (model.contains("reach_tolerance")) m.reach_tolerance = require_number(model, "model", "reach_tolerance");
  if (model.contains("bisection_tolerance")) m.bisection_tolerance = require_number(model, "model", "bisection_tolerance");
  if (model.contains("fw_gap_tolerance")) m.fw_gap_tolerance = require_number(model, "model", "fw_gap_tolerance");
  if (model.contains("max_fw_iterations")) m.max_fw_iterations = model["max_fw_iterations"].get<int>();
  if (model.contains("vertex_threshold")) m.vertex_threshold = require_number(model, "model", "vertex_threshold");
  if (!model.contains("omega") || !model["omega"].is_array()) {
    throw ConfigError("missing or malformed field 'model.omega'");
  }
  for (const json& entry : model["omega"]) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
        !entry[1].is_number()) {
      throw ConfigError("field 'model.omega' entries must be [lo, hi] pairs");
    }
    config.model.omega.push_back({entry[0].get<double>(), entry[1].get<double>()});
  }
  config.model.validate();

  if (!document.contains("problem")) throw ConfigError("missing 'problem' section");
  const json& problem = document["problem"];
  reject_unknown_keys(problem, "problem",
                      {"kind", "y0", "z_d", "M", "tau", "r", "horizon", "case",
                       "map_kind", "grid", "check_tolerance"});
  ProblemConfig& p = config.problem;
  if (!problem.contains("kind")) throw ConfigError("missing field 'problem.kind'");
  p.kind = problem["kind"].get<std::string>();
  if (std::find(kProblemKinds.begin(), kProblemKinds.end(), p.kind) ==
      kProblemKinds.end()) {
    throw ConfigError("unknown problem.kind '" + p.kind + "'");
  }
  if (problem.contains("y0")) p.y0 = parse_complex_vector(problem["y0"], "problem.y0");
  if (problem.contains("z_d")) p.z_d = parse_complex_vector(problem["z_d"], "problem.z_d");
  if (problem.contains("M")) p.M = require_number(problem, "problem", "M");
  if (problem.contains("tau")) p.tau = require_number(problem, "problem", "tau");
  if (problem.contains("r")) p.r = require_number(problem, "problem", "r");
  if (problem.contains("horizon")) p.horizon = require_number(problem, "problem", "horizon");
  if (problem.contains("case")) p.case_name = problem["case"].get<std::string>();
  if (problem.contains("map_kind")) p.map_kind = problem["map_kind"].get<std::string>();
  if (problem.contains("grid")) p.grid = problem["grid"].get<std::vector<double>>();
  if (problem.contains("check_tolerance")) p.check_tolerance = require_number(problem, "problem", "check_tolerance");

  const int n = config.model.num_modes;
  if (p.y0.size() == 0) {
    throw ConfigError("missing field 'problem.y0'");
  }
  if (p.y0.size() != n) {
    throw ConfigError("field 'problem.y0' must have length model.num_modes");
  }
  if (p.z_d.size() == 0) p.z_d = CVec::Zero(n);
  if (p.z_d.size() != n) {
    throw ConfigError("field 'problem.z_d' must have length model.num_modes");
  }

  if (document.contains("output")) {
    const json& output = document["output"];
    reject_unknown_keys(output, "output", {"dir", "json", "csv"});
    if (output.contains("dir")) config.output.dir = output["dir"].get<std::string>();
    if (output.contains("json")) config.output.json = output["json"].get<bool>();
    if (output.contains("csv")) config.output.csv = output["csv"].get<bool>();
  }
  return config;
}

json emit_scenario(const ScenarioConfig& config) {
  json omega = json::array();
  for (const Interval& iv : config.model.omega) {
    omega.push_back({iv.lo, iv.hi});
  }
  json model{{"domain_length", config.model.domain_length},
             {"num_modes", config.model.num_modes},
             {"omega", omega},
             {"horizon", config.model.horizon},
             {"num_time_intervals", config.model.num_time_intervals},
             {"reach_tolerance", config.model.reach_tolerance},
             {"bisection_tolerance", config.model.bisection_tolerance},
             {"fw_gap_tolerance", config.model.fw_gap_tolerance},
             {"max_fw_iterations", config.model.max_fw_iterations},
             {"vertex_threshold", config.model.vertex_threshold}};
  json problem{{"kind", config.problem.kind},
               {"y0", emit_complex_vector(config.problem.y0)},
               {"z_d", emit_complex_vector(config.problem.z_d)},
               {"M", config.problem.M},
               {"tau", config.problem.tau},
               {"r", config.problem.r},
               {"horizon", config.problem.horizon},
               {"case", config.problem.case_name},
               {"map_kind", config.problem.map_kind},
               {"grid", config.problem.grid},
               {"check_tolerance", config.problem.check_tolerance}};
  json output{{"dir", config.output.dir},
              {"json", config.output.json},
              {"csv", config.output.csv}};
  return json{{"id", config.id},
              {"model", model},
              {"problem", problem},
              {"output", output},
              {"seed", config.seed}};
}

RunReport run_scenario(const ScenarioConfig& config, int parallelism) {
  const auto start = std::chrono::steady_clock::now();
  if (parallelism <= 0) parallelism = env_parallelism();

  RunReport report;
  json result;
  bool non_converged = false;
  bool check_failed = false;

  const ModelPtr model = build_model(config.model);
  const ProblemConfig& p = config.problem;

  if (p.kind == "op") {
    OpProblem problem{model, p.y0, p.z_d, p.M, p.tau};
    const OpSolution solution = solve_op(problem);
    non_converged = !solution.converged;
    result = op_payload(solution);
  } else if (p.kind == "np" || p.kind == "tp" || p.kind == "m_tau") {
    ReachContext ctx(model, p.y0, p.z_d);
    ValueMapResult value;
    if (p.kind == "np") value = solve_np(ctx, p.tau, p.r);
    else if (p.kind == "tp") value = solve_tp(ctx, p.M, p.r);
    else value = m_tau(ctx, p.tau);
    // a warning with a note is a documented outcome, not a solver failure
    non_converged = value.warning && value.note.empty();
    result = value_map_payload(value);
  } else if (p.kind == "tocp") {
    const ValueMapResult value = solve_tocp(config.model, p.y0, p.M);
    non_converged = value.warning;
    result = value_map_payload(value);
  } else if (p.kind == "nocp") {
    const double horizon = p.horizon > 0.0 ? p.horizon : config.model.horizon;
    const ValueMapResult value = solve_nocp(config.model, p.y0, horizon);
    non_converged = value.warning;
    result = value_map_payload(value);
  } else if (p.kind == "verify-1.2") {
    const EquivalenceReport eq =
        check_theorem_1_2(config.model, p.y0, p.M, p.check_tolerance);
    check_failed = !eq.all_pass();
    result = report_payload(eq);
  } else if (p.kind == "verify-1.3") {
    ReachContext ctx(model, p.y0, p.z_d);
    Theorem13Params params;
    params.which = theorem_case_from_string(p.case_name);
    params.M = p.M;
    params.tau = p.tau;
    params.r = p.r;
    const EquivalenceReport eq =
        check_theorem_1_3_case(ctx, params, p.check_tolerance);
    check_failed = !eq.all_pass();
    result = report_payload(eq);
  } else if (p.kind == "verify-reversal") {
    ReachContext ctx(model, p.y0, p.z_d);
    const EquivalenceReport eq = check_time_reversal(ctx, p.tau);
    check_failed = !eq.all_pass();
    result = report_payload(eq);
  } else if (p.kind == "map") {
    MapParams params;
    params.model = model;
    params.y0 = p.y0;
    params.z_d = p.z_d;
    params.tau = p.tau;
    params.r = p.r;
    const MapSample sample =
        sample_map(map_kind_from_string(p.map_kind), p.grid, params, parallelism);
    result = map_payload(sample);
  }

  report.exit_code = check_failed ? kExitCheckFailed
                     : non_converged ? kExitNonConverged
                                     : kExitOk;
  // The echoed scenario carries the computational inputs only; the output
  // location must not perturb the report bytes.
  ScenarioConfig echoed = config;
  echoed.output.dir = ".";
  report.document = json{{"schema_version", kSchemaVersion},
                         {"tool_version", kToolVersion},
                         {"scenario", emit_scenario(echoed)},
                         {"result", result},
                         {"exit_status", report.exit_code}};
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

void emit_map_csv(const MapSample& sample, const std::string& path) {
  if (sample.grid.empty()) {
    throw std::invalid_argument("emit_map_csv: empty sample");
  }
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings
  if (!out) throw std::runtime_error("emit_map_csv: cannot write " + path);
  out << "abscissa,value,status\n";
  for (std::size_t i = 0; i < sample.grid.size(); ++i) {
    out << format_double(sample.grid[i]) << ','
        << format_double(sample.values[i]) << ',' << sample.status[i] << '\n';
  }
  if (!out) throw std::runtime_error("emit_map_csv: write failed for " + path);
}

namespace {

void apply_override(json& document, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json* node = &document;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty()) throw ConfigError("override path '" + path + "' is malformed");
    if (dot == std::string::npos) {
      json parsed = json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
      return;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

}  // namespace

int run_scenario_file(const std::string& config_path,
                      const std::vector<std::string>& overrides,
                      const std::string& out_dir_override, std::ostream& log) {
  json document;
  ScenarioConfig config;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path);
    document = json::parse(in);
    for (const std::string& assignment : overrides) {
      apply_override(document, assignment);
    }
    config = parse_scenario(document);
    if (!out_dir_override.empty()) config.output.dir = out_dir_override;
  } catch (const json::exception& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  }

  RunReport report;
  try {
    report = run_scenario(config);
  } catch (const std::invalid_argument& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitNonConverged;
  }

  try {
    const std::filesystem::path dir(config.output.dir);
    std::filesystem::create_directories(dir);
    if (config.output.json) {
      const auto report_path = dir / (config.id + "_report.json");
      std::ofstream out(report_path, std::ios::binary);
      out << report.document.dump(2) << '\n';
      if (!out) throw std::runtime_error("cannot write " + report_path.string());
      log << "report: " << report_path.string() << '\n';

      const auto meta_path = dir / (config.id + "_meta.json");
      std::ofstream meta(meta_path, std::ios::binary);
      meta << json{{"wall_time_seconds", report.wall_time_seconds}}.dump(2)
           << '\n';
    }
    if (config.output.csv && config.problem.kind == "map") {
      MapSample sample;
      sample.kind = map_kind_from_string(config.problem.map_kind);
      sample.grid = report.document["result"]["grid"].get<std::vector<double>>();
      sample.values =
          report.document["result"]["values"].get<std::vector<double>>();
      sample.status =
          report.document["result"]["status"].get<std::vector<std::string>>();
      const auto csv_path =
          dir / (config.id + "_" + config.problem.map_kind + ".csv");
      emit_map_csv(sample, csv_path.string());
      log << "csv: " << csv_path.string() << '\n';
    }
  } catch (const std::exception& e) {
    log << "I/O error: " << e.what() << '\n';
    return kExitConfigError;
  }

  log << "exit_status: " << report.exit_code << '\n';
  return report.exit_code;
}

}  // namespace octl
