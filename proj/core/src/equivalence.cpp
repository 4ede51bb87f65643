#include "octl/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace octl {

namespace {

// Uniform and gaussian draws built from raw engine bits, so reports are
// reproducible across standard library implementations.
class SeededGenerator {
 public:
  explicit SeededGenerator(std::uint64_t seed) : engine_(seed) {}

  double uniform() {  // (0, 1]
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double gaussian() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

ControlSignal random_feasible_control(ModelPtr model, double tau, double bound,
                                      SeededGenerator& rng) {
  ControlSignal signal = ControlSignal::zero(model, tau);
  for (const ActiveSlice& slice : active_slices(*model, tau)) {
    CVec block(model->modes());
    for (int k = 0; k < model->modes(); ++k) {
      block[k] = Complex(rng.gaussian(), rng.gaussian());
    }
    const double norm = block.norm();
    if (norm > 0.0) block *= bound * rng.uniform() / norm;
    signal.values[slice.index] = block;
  }
  return signal;
}

double control_tolerance(std::initializer_list<double> deviations) {
  double dev = 0.0;
  for (double d : deviations) dev = std::max(dev, d);
  return 10.0 * dev;
}

// A bisection-produced control is bang-bang at its own probe bound, which is
// only known to the bracket; the certifiable deviation from the common bound
// is therefore floored by the bracket half-width.
double certified_deviation(const ControlSignal& control, double bound,
                           double window, const ValueMapResult& source) {
  return std::max(common_bound_deviation(control, bound, window),
                  0.5 * (source.hi - source.lo));
}

}  // namespace

bool EquivalenceReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckEntry& c) { return c.pass; });
}

void EquivalenceReport::add(const std::string& name, double residual,
                            double tolerance) {
  checks.push_back({name, residual, tolerance, residual <= tolerance});
}

void EquivalenceReport::finalize() {
  std::sort(checks.begin(), checks.end(),
            [](const CheckEntry& a, const CheckEntry& b) { return a.name < b.name; });
}

TheoremCase theorem_case_from_string(const std::string& name) {
  if (name == "i") return TheoremCase::i;
  if (name == "ii") return TheoremCase::ii;
  if (name == "iii") return TheoremCase::iii;
  throw std::invalid_argument("unknown theorem case: " + name);
}

double common_bound_deviation(const ControlSignal& control, double bound,
                              double tau) {
  double deviation = 0.0;
  for (const ActiveSlice& slice : active_slices(*control.model, tau)) {
    deviation = std::max(
        deviation, std::abs(control.values[slice.index].norm() - bound));
  }
  return deviation;
}

EquivalenceReport check_theorem_1_2(const ModelConfig& base, const CVec& y0,
                                    double M, double tol) {
  EquivalenceReport report;
  report.scenario_id = "theorem_1_2";
  report.parameters["M"] = M;
  report.parameters["tol"] = tol;
  if (!(M > 0.0) || y0.norm() == 0.0) {
    report.add("preconditions_hold", 1.0, 0.0);
    report.finalize();
    return report;
  }
  report.add("preconditions_hold", 0.0, 0.0);

  const ValueMapResult minimal_time = solve_tocp(base, y0, M);
  const ValueMapResult minimal_norm = solve_nocp(base, y0, minimal_time.value);
  const ValueMapResult round_trip = solve_tocp(base, y0, minimal_norm.value);

  report.parameters["T_M"] = minimal_time.value;
  report.parameters["M_T_M"] = minimal_norm.value;

  report.add("norm_of_minimal_time_horizon",
             std::abs(minimal_norm.value - M), tol);
  report.add("time_round_trip",
             std::abs(round_trip.value - minimal_time.value), tol);

  const ControlSignal& time_control = minimal_time.attaining_control;
  const ControlSignal& norm_control = minimal_norm.attaining_control;
  const double tol_ctrl =
      control_tolerance({certified_deviation(time_control, M, 0.0, minimal_time),
                         certified_deviation(norm_control, M, 0.0, minimal_norm)});
  const double distance = control_distance(time_control, norm_control);
  report.control_distances.push_back({"TOCP-NOCP", distance});
  report.add("control_agreement", distance, tol_ctrl);
  report.finalize();
  return report;
}

EquivalenceReport check_theorem_1_3_case(const ReachContext& ctx,
                                         const Theorem13Params& params,
                                         double tol) {
  EquivalenceReport report;
  report.parameters["tol"] = tol;
  const double r_T = ctx.r_free();

  auto out_of_domain = [&](const std::string& why) {
    report.add("preconditions_in_proved_domain", 1.0, 0.0);
    report.parameters["out_of_domain"] = 1.0;
    report.scenario_id += " (" + why + ")";
    report.finalize();
    return report;
  };

  switch (params.which) {
    case TheoremCase::i: {
      report.scenario_id = "theorem_1_3_case_i";
      report.parameters["M"] = params.M;
      report.parameters["tau"] = params.tau;
      const ValueMapResult sup = m_tau(ctx, params.tau);
      if (!(params.M > 0.0) || params.M >= sup.value) {
        return out_of_domain("requires 0 < M < M^tau");
      }
      report.add("preconditions_in_proved_domain", 0.0, 0.0);

      const OpSolution anchor = ctx.solve(params.M, params.tau);
      const double r_hat = anchor.r_value;
      report.parameters["r_induced"] = r_hat;

      const ValueMapResult np = solve_np(ctx, params.tau, r_hat);
      const ValueMapResult tp = solve_tp(ctx, params.M, r_hat);

      report.add("norm_identity", std::abs(np.value - params.M), tol);
      report.add("time_identity", std::abs(tp.value - params.tau), tol);
      report.add("distance_round_trip",
                 std::abs(ctx.r_of(np.value, params.tau) - r_hat), tol);
      report.add("distance_at_optimal_time",
                 std::abs(ctx.r_of(params.M, tp.value) - r_hat), tol);

      const ControlSignal& u_op = anchor.control;
      const ControlSignal& u_np = np.attaining_control;
      const ControlSignal& u_tp = tp.attaining_control;
      const double window = std::max(params.tau, tp.value);
      const double tol_ctrl = control_tolerance(
          {common_bound_deviation(u_op, params.M, window),
           certified_deviation(u_np, params.M, window, np),
           certified_deviation(u_tp, params.M, window, tp)});
      const double d_on = control_distance(u_op, u_np);
      const double d_ot = control_distance(u_op, u_tp);
      const double d_nt = control_distance(u_np, u_tp);
      report.control_distances.push_back({"OP-NP", d_on});
      report.control_distances.push_back({"OP-TP", d_ot});
      report.control_distances.push_back({"NP-TP", d_nt});
      report.add("control_OP_NP", d_on, tol_ctrl);
      report.add("control_OP_TP", d_ot, tol_ctrl);
      report.add("control_NP_TP", d_nt, tol_ctrl);
      break;
    }
    case TheoremCase::ii: {
      report.scenario_id = "theorem_1_3_case_ii";
      report.parameters["tau"] = params.tau;
      report.parameters["r"] = params.r;
      if (!(params.r > 0.0) || params.r >= r_T) {
        return out_of_domain("requires r in (0, r_T)");
      }
      report.add("preconditions_in_proved_domain", 0.0, 0.0);

      const ValueMapResult np = solve_np(ctx, params.tau, params.r);
      const double m_hat = np.value;
      report.parameters["M_induced"] = m_hat;

      const OpSolution op = ctx.solve(m_hat, params.tau);
      const ValueMapResult tp = solve_tp(ctx, m_hat, params.r);

      report.add("distance_identity", std::abs(op.r_value - params.r), tol);
      report.add("time_identity", std::abs(tp.value - params.tau), tol);

      const ControlSignal& u_np = np.attaining_control;
      const ControlSignal& u_op = op.control;
      const ControlSignal& u_tp = tp.attaining_control;
      const double window = std::max(params.tau, tp.value);
      const double tol_ctrl = control_tolerance(
          {certified_deviation(u_np, m_hat, window, np),
           common_bound_deviation(u_op, m_hat, window),
           certified_deviation(u_tp, m_hat, window, tp)});
      const double d_no = control_distance(u_np, u_op);
      const double d_nt = control_distance(u_np, u_tp);
      const double d_ot = control_distance(u_op, u_tp);
      report.control_distances.push_back({"NP-OP", d_no});
      report.control_distances.push_back({"NP-TP", d_nt});
      report.control_distances.push_back({"OP-TP", d_ot});
      report.add("control_NP_OP", d_no, tol_ctrl);
      report.add("control_NP_TP", d_nt, tol_ctrl);
      report.add("control_OP_TP", d_ot, tol_ctrl);
      break;
    }
    case TheoremCase::iii: {
      report.scenario_id = "theorem_1_3_case_iii";
      report.parameters["M"] = params.M;
      report.parameters["r"] = params.r;
      if (!(params.M > 0.0) || !(params.r > 0.0) || params.r >= r_T) {
        return out_of_domain("requires M > 0 and r in (0, r_T)");
      }
      const double r_at_zero = ctx.r_of(params.M, 0.0);
      if (params.r < r_at_zero - 1e-9 * r_T) {
        return out_of_domain("requires r >= r(M, 0)");
      }
      report.add("preconditions_in_proved_domain", 0.0, 0.0);

      const ValueMapResult tp = solve_tp(ctx, params.M, params.r);
      const double tau_hat = tp.value;
      report.parameters["tau_induced"] = tau_hat;

      const ValueMapResult np = solve_np(ctx, tau_hat, params.r);
      const OpSolution op = ctx.solve(params.M, tau_hat);

      report.add("norm_identity", std::abs(np.value - params.M), tol);
      report.add("distance_identity", std::abs(op.r_value - params.r), tol);

      const ControlSignal& u_tp = tp.attaining_control;
      const ControlSignal& u_np = np.attaining_control;
      const ControlSignal& u_op = op.control;
      const double window = tau_hat;
      const double tol_ctrl = control_tolerance(
          {certified_deviation(u_tp, params.M, window, tp),
           certified_deviation(u_np, params.M, window, np),
           common_bound_deviation(u_op, params.M, window)});
      const double d_tn = control_distance(u_tp, u_np);
      const double d_to = control_distance(u_tp, u_op);
      const double d_no = control_distance(u_np, u_op);
      report.control_distances.push_back({"TP-NP", d_tn});
      report.control_distances.push_back({"TP-OP", d_to});
      report.control_distances.push_back({"NP-OP", d_no});
      report.add("control_TP_NP", d_tn, tol_ctrl);
      report.add("control_TP_OP", d_to, tol_ctrl);
      report.add("control_NP_OP", d_no, tol_ctrl);
      break;
    }
  }
  report.finalize();
  return report;
}

EquivalenceReport check_uniqueness(const ReachContext& ctx, double M,
                                   double tau, int n_seeds,
                                   std::uint64_t seed) {
  EquivalenceReport report;
  report.scenario_id = "uniqueness";
  report.parameters["M"] = M;
  report.parameters["tau"] = tau;
  report.parameters["n_seeds"] = n_seeds;
  report.parameters["seed"] = static_cast<double>(seed);

  const ValueMapResult sup = m_tau(ctx, tau);
  if (!(M > 0.0) || M >= sup.value) {
    report.add("preconditions_in_proved_domain", 1.0, 0.0);
    report.scenario_id += " (requires 0 < M < M^tau)";
    report.finalize();
    return report;
  }
  report.add("preconditions_in_proved_domain", 0.0, 0.0);

  const double tol = 1e-4 * M;
  SeededGenerator rng(seed);
  std::vector<ControlSignal> controls;
  for (int s = 0; s < n_seeds; ++s) {
    const ControlSignal start =
        random_feasible_control(ctx.model_ptr(), tau, M, rng);
    OpProblem problem{ctx.model_ptr(), ctx.y0(), ctx.z_d(), M, tau};
    const OpSolution solution = solve_op(problem, start);
    std::ostringstream name;
    name << "bang_bang_deviation_run_" << s;
    report.add(name.str(), solution.bang_bang_deviation, tol);
    controls.push_back(solution.control);
  }
  double max_distance = 0.0;
  for (std::size_t a = 0; a < controls.size(); ++a) {
    for (std::size_t b = a + 1; b < controls.size(); ++b) {
      max_distance =
          std::max(max_distance, control_distance(controls[a], controls[b]));
    }
  }
  report.control_distances.push_back({"max_pairwise", max_distance});
  report.add("uniqueness_max_distance", max_distance, tol);
  report.finalize();
  return report;
}

EquivalenceReport check_time_reversal(const ReachContext& ctx, double tau) {
  const Model& model = ctx.model();
  if (!(ctx.r_free() > 0.0)) {
    throw std::invalid_argument(
        "check_time_reversal: the free endpoint already matches the target (r_T = 0)");
  }
  if (tau < 0.0 || tau >= model.horizon()) {
    throw std::invalid_argument("check_time_reversal: tau must lie in [0, T)");
  }
  EquivalenceReport report;
  report.scenario_id = "time_reversal";
  report.parameters["tau"] = tau;

  const ValueMapResult direct = m_tau(ctx, tau);
  // Running the flow backward conjugates the coordinates, so the reversed
  // null-control problem starts from the conjugated shifted target.
  const CVec shifted_target =
      ctx.z_d() - free_propagate(model, ctx.y0(), model.horizon());
  const ValueMapResult reversed = solve_nocp(
      model.config, shifted_target.conjugate(), model.horizon() - tau);

  report.parameters["direct"] = direct.value;
  report.parameters["reversed"] = reversed.value;
  report.add("time_reversal_agreement", std::abs(direct.value - reversed.value),
             2.0 * model.config.bisection_tolerance);
  report.finalize();
  return report;
}

}  // namespace octl
