#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "octl/value_maps.hpp"
#include "single_mode_oracle.hpp"
#include "test_instances.hpp"

#include <cmath>

using namespace octl;

namespace {

ReachContext single_mode_context(int intervals = 128) {
  return ReachContext(build_model(instances::single_mode(intervals)),
                      instances::single_mode_y0(),
                      instances::single_mode_target());
}

ReachContext two_mode_context(int intervals = 128) {
  return ReachContext(build_model(instances::two_mode(intervals)),
                      instances::two_mode_y0(), instances::two_mode_target());
}

}  // namespace

TEST_CASE("optimal norm M(tau, r) against the one-mode closed form") {
  oracle::SingleMode closed_form;
  const ReachContext ctx = single_mode_context();
  const double eps = ctx.model().config.bisection_tolerance;

  SUBCASE("interior radii") {
    for (double tau : {0.0, 0.25}) {
      for (double r : {0.2, 0.5, 0.8}) {
        const ValueMapResult result = solve_np(ctx, tau, r);
        CHECK(std::abs(result.value - closed_form.optimal_norm(tau, r)) <= eps);
        CHECK(result.hi - result.lo <= eps);
        CHECK(result.value >= result.lo);
        CHECK(result.value <= result.hi);
        CHECK(result.attaining_control.sup_norm() <=
              result.value * (1 + 1e-12));
      }
    }
    // continuum closed form M(0, 0.5) = (1 - 0.5) / (0.5 * 1) = 1
    CHECK(std::abs(solve_np(ctx, 0.0, 0.5).value - 1.0) <= 1e-4);
  }
  SUBCASE("radius approaching r_T sends the norm to zero") {
    const ValueMapResult near_free = solve_np(ctx, 0.0, 0.999);
    CHECK(std::abs(near_free.value - closed_form.optimal_norm(0.0, 0.999)) <=
          eps);
    CHECK(near_free.value <= 3e-3);
  }
  SUBCASE("r beyond r_T returns zero with a warning") {
    const ValueMapResult res = solve_np(ctx, 0.0, 1.5);
    CHECK(res.value == 0.0);
    CHECK(res.warning);
  }
  SUBCASE("nonpositive r is rejected") {
    CHECK_THROWS_AS(solve_np(ctx, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_np(ctx, 0.0, -0.2), std::invalid_argument);
  }
  SUBCASE("inverse identity r = r(M(tau, r), tau)") {
    for (double r : {0.2, 0.5, 0.8}) {
      const ValueMapResult result = solve_np(ctx, 0.0, r);
      CHECK(std::abs(ctx.r_of(result.value, 0.0) - r) <= 1e-3);
    }
  }
}

TEST_CASE("optimal time tau(M, r) against the one-mode closed form") {
  oracle::SingleMode closed_form;
  const ReachContext ctx = single_mode_context();
  const double eps = ctx.model().config.bisection_tolerance;

  SUBCASE("closed-form value tau(2, 0.5) = 0.5") {
    const ValueMapResult result = solve_tp(ctx, 2.0, 0.5);
    CHECK(std::abs(result.value - closed_form.optimal_time(2.0, 0.5)) <= eps);
    CHECK(std::abs(result.value - 0.5) <= 1e-4);
  }
  SUBCASE("minimal feasible bound activates at tau = 0") {
    const double minimal = solve_np(ctx, 0.0, 0.5).value;
    const ValueMapResult result = solve_tp(ctx, minimal, 0.5);
    CHECK(result.value <= eps);
  }
  SUBCASE("infeasible bound names the minimal feasible one") {
    try {
      solve_tp(ctx, 0.5, 0.5);  // M(0, 0.5) = 1 > 0.5
      FAIL("expected an infeasibility error");
    } catch (const std::invalid_argument& e) {
      const std::string message = e.what();
      CHECK(message.find("minimal feasible bound") != std::string::npos);
    }
  }
  SUBCASE("identity M = M(tau(M, r), r)") {
    const ValueMapResult tp = solve_tp(ctx, 2.0, 0.5);
    const ValueMapResult np = solve_np(ctx, tp.value, 0.5);
    CHECK(std::abs(np.value - 2.0) <= 1e-3);
  }
  SUBCASE("identity tau = tau(M(tau, r), r)") {
    const double tau = 0.25;
    const ValueMapResult np = solve_np(ctx, tau, 0.5);
    const ValueMapResult tp = solve_tp(ctx, np.value, 0.5);
    CHECK(std::abs(tp.value - tau) <= 1e-3);
  }
}

TEST_CASE("exact-reach norm M^tau") {
  oracle::SingleMode closed_form;
  const ReachContext ctx = single_mode_context();
  const double eta_abs = ctx.model().config.reach_tolerance * ctx.r_free();

  SUBCASE("closed forms at tau = 0 and tau = 0.5") {
    const ValueMapResult at_zero = m_tau(ctx, 0.0);
    CHECK(std::abs(at_zero.value - closed_form.exact_reach_norm(0.0, eta_abs)) <=
          1e-4);
    CHECK(std::abs(at_zero.value - 2.0) <= 1e-4);

    const ValueMapResult at_half = m_tau(ctx, 0.5);
    CHECK(std::abs(at_half.value - closed_form.exact_reach_norm(0.5, eta_abs)) <=
          1e-4);
    CHECK(std::abs(at_half.value - 4.0) <= 2e-4);
  }
  SUBCASE("strict increase in tau") {
    const double a = m_tau(ctx, 0.0).value;
    const double b = m_tau(ctx, 0.25).value;
    const double c = m_tau(ctx, 0.5).value;
    CHECK(a < b);
    CHECK(b < c);
  }
  SUBCASE("attaining control reaches within eta") {
    const ValueMapResult result = m_tau(ctx, 0.25);
    const Trajectory trajectory =
        solve_forward(ctx.model(), ctx.y0(), result.attaining_control);
    CHECK((trajectory.terminal() - ctx.z_d()).norm() <= eta_abs * (1 + 1e-9));
    CHECK(result.attaining_control.sup_norm() <= result.value * (1 + 1e-12));
  }
}

TEST_CASE("minimal time T_M") {
  oracle::SingleMode closed_form;
  const ModelConfig base = instances::single_mode();
  const CVec y0 = instances::single_mode_y0();
  const double eta_abs = base.reach_tolerance * y0.norm();

  SUBCASE("closed form T_M = ||y0|| / (b M)") {
    const ValueMapResult result = solve_tocp(base, y0, 1.0);
    CHECK(std::abs(result.value - closed_form.minimal_time(1.0, eta_abs)) <=
          base.bisection_tolerance);
    CHECK(std::abs(result.value - 2.0) <= 1e-4);
  }
  SUBCASE("doubling the bound halves the time") {
    const double t1 = solve_tocp(base, y0, 1.0).value;
    const double t2 = solve_tocp(base, y0, 2.0).value;
    CHECK(std::abs(t2 - 0.5 * t1) <= 2e-4);
  }
  SUBCASE("limit probes far from the base horizon") {
    CHECK(std::abs(solve_tocp(base, y0, 0.1).value - 20.0) <= 2e-3);
    CHECK(std::abs(solve_tocp(base, y0, 10.0).value - 0.2) <= 1e-4);
  }
  SUBCASE("degenerate initial state returns zero") {
    const ValueMapResult result = solve_tocp(base, CVec::Zero(1), 1.0);
    CHECK(result.value == 0.0);
  }
  SUBCASE("nonpositive bound is rejected") {
    CHECK_THROWS_AS(solve_tocp(base, y0, 0.0), std::invalid_argument);
  }
}

TEST_CASE("minimal norm M_T and the round-trip identities") {
  oracle::SingleMode closed_form;
  const ModelConfig base = instances::single_mode();
  const CVec y0 = instances::single_mode_y0();
  const double eta_abs = base.reach_tolerance * y0.norm();

  SUBCASE("closed form M_T = ||y0|| / (b T)") {
    const ValueMapResult result = solve_nocp(base, y0, 2.0);
    CHECK(std::abs(result.value - closed_form.minimal_norm(2.0, eta_abs)) <=
          base.bisection_tolerance);
    CHECK(std::abs(result.value - 1.0) <= 1e-4);
  }
  SUBCASE("degenerate initial state returns zero") {
    const ValueMapResult result = solve_nocp(base, CVec::Zero(1), 1.0);
    CHECK(result.value == 0.0);
  }
  SUBCASE("nonpositive horizon is rejected") {
    CHECK_THROWS_AS(solve_nocp(base, y0, 0.0), std::invalid_argument);
  }
  SUBCASE("T = T_{M_T}") {
    const double horizon = 1.5;
    const double m = solve_nocp(base, y0, horizon).value;
    const double t = solve_tocp(base, y0, m).value;
    CHECK(std::abs(t - horizon) <= 1e-3);
  }
  SUBCASE("M = M_{T_M}") {
    const double bound = 1.25;
    const double t = solve_tocp(base, y0, bound).value;
    const double m = solve_nocp(base, y0, t).value;
    CHECK(std::abs(m - bound) <= 1e-3);
  }
}

TEST_CASE("latest feasible activation of a fixed control") {
  const ReachContext ctx = single_mode_context();
  const double eps = ctx.model().config.bisection_tolerance;

  SUBCASE("the optimal-time control is tight at tau(M, r)") {
    const ValueMapResult tp = solve_tp(ctx, 2.0, 0.5);
    const double latest = latest_feasible_tau(ctx, tp.attaining_control, 0.5);
    CHECK(std::abs(latest - tp.value) <= eps);
  }
  SUBCASE("zero control with a huge ball is feasible until the horizon") {
    const ControlSignal zero = ControlSignal::zero(ctx.model_ptr(), 0.0);
    const double latest = latest_feasible_tau(ctx, zero, 2.0);
    CHECK(latest >= ctx.model().horizon() - eps * (1 + 1e-12));
  }
  SUBCASE("infeasible control is rejected") {
    const ControlSignal zero = ControlSignal::zero(ctx.model_ptr(), 0.0);
    CHECK_THROWS_AS(latest_feasible_tau(ctx, zero, 0.5), std::invalid_argument);
  }
}

TEST_CASE("two-mode value maps are mutually consistent") {
  const ReachContext ctx = two_mode_context();
  const double r = 0.5 * ctx.r_free();

  const ValueMapResult np = solve_np(ctx, 0.25, r);
  CHECK(np.value > 0.0);
  CHECK(std::abs(ctx.r_of(np.value, 0.25) - r) <= 1e-3);

  const ValueMapResult tp = solve_tp(ctx, np.value, r);
  CHECK(std::abs(tp.value - 0.25) <= 1e-3);

  const ValueMapResult sup = m_tau(ctx, 0.25);
  CHECK(np.value < sup.value);
}

TEST_CASE("map sampling") {
  oracle::SingleMode closed_form;
  MapParams params;
  params.model = build_model(instances::single_mode());
  params.y0 = instances::single_mode_y0();
  params.z_d = instances::single_mode_target();
  params.tau = 0.0;
  params.r = 0.5;

  SUBCASE("r_of_M on the closed-form grid") {
    const MapSample sample =
        sample_map(MapKind::r_of_M, {0.0, 0.5, 1.0, 1.5, 2.0}, params);
    const std::vector<double> expected = {1.0, 0.75, 0.5, 0.25, 0.0};
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(sample.status[i] == "ok");
      CHECK(std::abs(sample.values[i] - expected[i]) <= 1e-4);
    }
  }
  SUBCASE("M_sup_tau and T_of_M closed forms") {
    const MapSample sup = sample_map(MapKind::M_sup_tau, {0.0, 0.5}, params);
    CHECK(std::abs(sup.values[0] - 2.0) <= 1e-4);
    CHECK(std::abs(sup.values[1] - 4.0) <= 2e-4);
    const MapSample times = sample_map(MapKind::T_of_M, {1.0, 2.0}, params);
    CHECK(std::abs(times.values[0] - 2.0) <= 1e-4);
    CHECK(std::abs(times.values[1] - 1.0) <= 1e-4);
  }
  SUBCASE("out-of-domain points become error entries, the run continues") {
    const MapSample sample =
        sample_map(MapKind::M_of_tau, {-0.5, 0.0, 0.25}, params);
    CHECK(sample.status[0].rfind("error:", 0) == 0);
    CHECK(std::isnan(sample.values[0]));
    CHECK(sample.status[1] == "ok");
    CHECK(sample.status[2] == "ok");
    CHECK(std::abs(sample.values[1] - closed_form.optimal_norm(0.0, 0.5)) <=
          1e-4);
  }
  SUBCASE("parallel evaluation matches the sequential one") {
    const std::vector<double> grid = {0.1, 0.4, 0.7, 1.0, 1.3};
    const MapSample sequential = sample_map(MapKind::r_of_M, grid, params, 1);
    const MapSample parallel = sample_map(MapKind::r_of_M, grid, params, 4);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(sequential.values[i] == parallel.values[i]);
    }
  }
  SUBCASE("unsorted or empty grids are rejected") {
    CHECK_THROWS_AS(sample_map(MapKind::r_of_M, {}, params),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_map(MapKind::r_of_M, {1.0, 0.5}, params),
                    std::invalid_argument);
  }
}

TEST_CASE("memoized r_of returns identical values") {
  const ReachContext ctx = two_mode_context(64);
  const double first = ctx.r_of(0.7, 0.25);
  const double second = ctx.r_of(0.7, 0.25);
  CHECK(first == second);
}

TEST_CASE("set identity: r >= r(M, 0) iff M >= M(0, r)") {
  // Membership in {r in [r(M, 0), r_T)} must agree with {M >= M(0, r)} away
  // from the common boundary.
  const ReachContext ctx = two_mode_context(64);
  const double r_T = ctx.r_free();
  const double margin = 1e-3;
  for (double m : {0.3, 0.8, 1.3}) {
    for (double rho : {0.25, 0.45, 0.65, 0.85}) {
      const double r = rho * r_T;
      const double r_at_zero = ctx.r_of(m, 0.0);
      const double minimal_bound = solve_np(ctx, 0.0, r).value;
      if (std::abs(r - r_at_zero) < margin ||
          std::abs(m - minimal_bound) < margin) {
        continue;  // too close to the shared boundary to classify
      }
      const bool in_a = r >= r_at_zero;
      const bool in_b = m >= minimal_bound;
      CHECK(in_a == in_b);
    }
  }
}
