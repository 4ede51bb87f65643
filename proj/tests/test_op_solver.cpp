#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "octl/op_solver.hpp"
#include "single_mode_oracle.hpp"
#include "subgradient_oracle.hpp"
#include "test_instances.hpp"

#include <random>

using namespace octl;

namespace {

OpProblem single_mode_problem(double bound, double tau, int intervals = 128) {
  OpProblem problem;
  problem.model = build_model(instances::single_mode(intervals));
  problem.y0 = instances::single_mode_y0();
  problem.z_d = instances::single_mode_target();
  problem.bound = bound;
  problem.activation = tau;
  return problem;
}

OpProblem two_mode_problem(double bound, double tau, int intervals = 128) {
  OpProblem problem;
  problem.model = build_model(instances::two_mode(intervals));
  problem.y0 = instances::two_mode_y0();
  problem.z_d = instances::two_mode_target();
  problem.bound = bound;
  problem.activation = tau;
  return problem;
}

ControlSignal random_feasible(std::mt19937_64& rng, ModelPtr model, double tau,
                              double bound) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ControlSignal signal = ControlSignal::zero(model, tau);
  for (const ActiveSlice& slice : active_slices(*model, tau)) {
    CVec block(model->modes());
    for (int k = 0; k < model->modes(); ++k) {
      block[k] = Complex(normal(rng), normal(rng));
    }
    if (block.norm() > 0.0) block *= bound * unif(rng) / block.norm();
    signal.values[slice.index] = block;
  }
  return signal;
}

}  // namespace

TEST_CASE("zero bound returns the free distance with the zero control") {
  const OpProblem problem = single_mode_problem(0.0, 0.0);
  const OpSolution solution = solve_op(problem);
  CHECK(solution.converged);
  CHECK(solution.r_value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(solution.control.sup_norm() == 0.0);
}

TEST_CASE("single-mode closed form r(M, tau) = max(0, r_T - b M S)") {
  oracle::SingleMode closed_form;
  for (double tau : {0.0, 0.3}) {
    for (double bound : {0.4, 1.0, 1.6}) {
      const OpProblem problem = single_mode_problem(bound, tau);
      const OpSolution solution = solve_op(problem);
      CHECK(solution.converged);
      CHECK(solution.r_value ==
            doctest::Approx(closed_form.r(bound, tau)).epsilon(1e-10));
    }
  }
  // The continuum value r(1, 0) = 0.5 is matched within the control
  // resolution of the K = 128 grid.
  const OpSolution at_one = solve_op(single_mode_problem(1.0, 0.0));
  CHECK(std::abs(at_one.r_value - 0.5) <= 1e-4);
}

TEST_CASE("bound beyond the exact-reach norm drives the distance to zero") {
  // At K = 128 the discrete exact-reach norm is 1 / (0.5 S) = 2.0000051, so
  // M = 2 leaves the control-resolution remainder r = 1 - S = 2.543e-6.
  oracle::SingleMode closed_form;
  const OpSolution at_two = solve_op(single_mode_problem(2.0, 0.0));
  CHECK(at_two.r_value ==
        doctest::Approx(closed_form.r(2.0, 0.0)).epsilon(1e-6));
  CHECK(at_two.r_value <= 1e-4);  // continuum value is 0

  // Strictly inside the reachable regime the distance collapses to zero.
  const OpSolution beyond = solve_op(single_mode_problem(2.1, 0.0));
  CHECK(beyond.r_value <= 1e-9);
}

TEST_CASE("certificates at a converged single-mode solve") {
  const OpProblem problem = single_mode_problem(1.0, 0.0);
  const OpSolution solution = solve_op(problem);
  CHECK(solution.fw_gap <= problem.model->config.fw_gap_tolerance);
  CHECK(solution.bang_bang_deviation <= 1e-6 * problem.bound);
  CHECK(solution.max_principle_residual <= 1e-8);

  const auto [deviation, residual] = verify_certificates(solution, problem);
  CHECK(deviation <= 1e-6 * problem.bound);
  CHECK(residual <= 1e-8);

  SUBCASE("halving the control shows up as a deviation of M / 2") {
    OpSolution scaled = solution;
    for (CVec& value : scaled.control.values) value *= 0.5;
    const auto [dev_half, res_half] = verify_certificates(scaled, problem);
    CHECK(dev_half == doctest::Approx(0.5 * problem.bound).epsilon(1e-6));
    CHECK(res_half > 0.0);
  }
}

TEST_CASE("two-mode certificates and gap guarantee") {
  const OpProblem problem = two_mode_problem(0.8, 0.0);
  const OpSolution solution = solve_op(problem);
  CHECK(solution.converged);
  CHECK(solution.fw_gap <= problem.model->config.fw_gap_tolerance);
  CHECK(solution.bang_bang_deviation <= 1e-4 * problem.bound);
  CHECK(solution.max_principle_residual <= 1e-8);
  CHECK(solution.r_value > 0.0);
  const double r_free =
      (problem.z_d - free_propagate(*problem.model, problem.y0, 1.0)).norm();
  CHECK(solution.r_value < r_free);
}

TEST_CASE("uniqueness: independent feasible starts agree") {
  const OpProblem problem = two_mode_problem(0.8, 0.25);
  std::mt19937_64 rng(97);
  const OpSolution base = solve_op(problem);
  for (int trial = 0; trial < 3; ++trial) {
    const ControlSignal start =
        random_feasible(rng, problem.model, problem.activation, problem.bound);
    const OpSolution other = solve_op(problem, start);
    CHECK(control_distance(base.control, other.control) <=
          1e-4 * problem.bound);
  }
}

TEST_CASE("strict monotonicity of r in the bound") {
  oracle::SingleMode closed_form;
  const std::vector<double> grid = {0.0, 0.5, 1.0, 1.5};
  std::vector<double> values;
  for (double bound : grid) {
    values.push_back(solve_op(single_mode_problem(bound, 0.0)).r_value);
    CHECK(values.back() ==
          doctest::Approx(closed_form.r(bound, 0.0)).epsilon(1e-9));
  }
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    CHECK(values[i] > values[i + 1] - 2e-4);
    // slope between grid points is b * S per unit of M
    CHECK(values[i] - values[i + 1] ==
          doctest::Approx(0.5 * 0.5 * closed_form.active_gain(0.0))
              .epsilon(1e-8));
  }
}

TEST_CASE("Lipschitz bound |r(M1) - r(M2)| <= (T - tau) |M1 - M2|") {
  for (double tau : {0.0, 0.3, 0.6}) {
    const std::vector<double> bounds = {0.1, 0.35, 0.6, 0.85, 1.1, 1.35};
    std::vector<double> values;
    double horizon = 1.0;
    for (double bound : bounds) {
      const OpProblem problem = two_mode_problem(bound, tau);
      horizon = problem.model->horizon();
      values.push_back(solve_op(problem).r_value);
    }
    for (std::size_t a = 0; a < bounds.size(); ++a) {
      for (std::size_t b = a + 1; b < bounds.size(); ++b) {
        CHECK(std::abs(values[a] - values[b]) <=
              (horizon - tau) * std::abs(bounds[a] - bounds[b]) + 2e-4);
      }
    }
  }
}

TEST_CASE("oracle equivalence on the two-mode instance") {
  SUBCASE("K = 4 against a long-run projected-gradient solve") {
    const OpProblem problem = two_mode_problem(0.8, 0.0, 4);
    const OpSolution solution = solve_op(problem);
    const auto reference = oracle::projected_gradient_r(
        *problem.model, problem.y0, problem.z_d, problem.bound,
        problem.activation, 200000);
    CHECK(std::abs(solution.r_value - reference.r_value) <= 1e-4);
  }
}

TEST_CASE("argument errors") {
  CHECK_THROWS_AS(solve_op(single_mode_problem(-1.0, 0.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_op(single_mode_problem(1.0, 1.0)),
                  std::invalid_argument);
  SUBCASE("coincident free endpoint and target is rejected") {
    OpProblem degenerate = single_mode_problem(1.0, 0.0);
    degenerate.z_d = free_propagate(*degenerate.model, degenerate.y0, 1.0);
    CHECK_THROWS_AS(solve_op(degenerate), std::invalid_argument);
  }
  SUBCASE("initial control on a mismatched grid is rejected") {
    const OpProblem problem = two_mode_problem(0.8, 0.0, 16);
    auto other = build_model(instances::two_mode(32));
    const ControlSignal wrong = ControlSignal::zero(other, 0.0);
    CHECK_THROWS_AS(solve_op(problem, wrong), std::invalid_argument);
  }
}

TEST_CASE("iteration cap yields a flagged, not thrown, result") {
  OpProblem problem = two_mode_problem(0.8, 0.0);
  ModelConfig cfg = problem.model->config;
  cfg.max_fw_iterations = 1;
  cfg.fw_gap_tolerance = 1e-16;
  problem.model = build_model(cfg);
  const OpSolution solution = solve_op(problem);
  CHECK_FALSE(solution.converged);
  CHECK(solution.iterations == 1);
}
