#include "octl/value_maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace octl {

namespace {

constexpr int kMaxDoublings = 200;

double min_coupling_diagonal(const RMat& coupling) {
  double d = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < coupling.rows(); ++k) {
    d = std::min(d, coupling(k, k));
  }
  return std::max(d, 1e-12);
}

double min_coupling_diagonal(const Model& model) {
  return min_coupling_diagonal(model.coupling);
}

// Regula-falsi refinement of a monotone root inside the final bisection
// bracket; h must change sign between the endpoints. Returns the argument of
// the near-zero crossing (deterministic, a fixed number of steps).
template <typename Fn>
double refine_root(Fn&& h, double a, double ha, double b, double hb) {
  if (ha == 0.0) return a;
  if (hb == 0.0) return b;
  if ((ha > 0.0) == (hb > 0.0)) return hb <= 0.0 ? b : a;
  double best = hb <= 0.0 ? b : a;
  for (int step = 0; step < 4; ++step) {
    const double t = b - hb * (b - a) / (hb - ha);
    if (!(t > std::min(a, b)) || !(t < std::max(a, b))) break;
    const double ht = h(t);
    if (ht == 0.0) return t;
    if (std::abs(ht) < 1e-14) return t;
    if ((ht > 0.0) == (ha > 0.0)) {
      a = t;
      ha = ht;
    } else {
      b = t;
      hb = ht;
      best = t;
    }
  }
  return best;
}

ModelPtr rebuild_with_horizon(const ModelConfig& base, double horizon) {
  ModelConfig cfg = base;
  cfg.horizon = horizon;
  const double density = static_cast<double>(base.num_time_intervals) / base.horizon;
  cfg.num_time_intervals =
      std::max(1, static_cast<int>(std::llround(density * horizon)));
  return build_model(cfg);
}

}  // namespace

std::string to_string(MapKind kind) {
  switch (kind) {
    case MapKind::r_of_M: return "r_of_M";
    case MapKind::M_of_tau: return "M_of_tau";
    case MapKind::tau_of_M: return "tau_of_M";
    case MapKind::M_sup_tau: return "M_sup_tau";
    case MapKind::T_of_M: return "T_of_M";
    case MapKind::M_of_T: return "M_of_T";
  }
  throw std::invalid_argument("unknown map kind");
}

MapKind map_kind_from_string(const std::string& name) {
  if (name == "r_of_M") return MapKind::r_of_M;
  if (name == "M_of_tau") return MapKind::M_of_tau;
  if (name == "tau_of_M") return MapKind::tau_of_M;
  if (name == "M_sup_tau") return MapKind::M_sup_tau;
  if (name == "T_of_M") return MapKind::T_of_M;
  if (name == "M_of_T") return MapKind::M_of_T;
  throw std::invalid_argument("unknown map kind: " + name);
}

ReachContext::ReachContext(ModelPtr model, CVec y0, CVec z_d)
    : model_(std::move(model)), y0_(std::move(y0)), z_d_(std::move(z_d)) {
  const CVec zeta = z_d_ - free_propagate(*model_, y0_, model_->horizon());
  r_free_ = zeta.norm();
}

double ReachContext::r_of(double M, double tau) const {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find({M, tau});
    if (it != cache_.end()) return it->second;
  }
  const double value = solve(M, tau).r_value;
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.emplace(std::make_pair(M, tau), value);
  return value;
}

OpSolution ReachContext::solve(double M, double tau) const {
  if (tau >= model_->horizon()) {
    // Empty action window: the optimal distance is the free one.
    OpSolution s;
    s.control = ControlSignal::zero(model_, model_->horizon() * (1.0 - 1e-15));
    s.r_value = r_free_;
    s.converged = true;
    return s;
  }
  OpProblem problem{model_, y0_, z_d_, M, tau};
  return solve_op(problem);
}

ReachProbe ReachContext::probe(double M, double tau, double eta_abs) const {
  if (tau >= model_->horizon()) {
    ReachProbe p;
    p.reached = r_free_ <= eta_abs;
    p.certified = true;
    return p;
  }
  OpProblem problem{model_, y0_, z_d_, M, tau};
  return reach_probe(problem, eta_abs);
}

ValueMapResult solve_np(const ReachContext& ctx, double tau, double r) {
  const Model& model = ctx.model();
  if (r <= 0.0) {
    throw std::invalid_argument(
        "solve_np: r must be positive (exact reach is the m_tau map)");
  }
  if (tau < 0.0 || tau >= model.horizon()) {
    throw std::invalid_argument("solve_np: tau must lie in [0, T)");
  }
  ValueMapResult result;
  if (r >= ctx.r_free()) {
    result.value = 0.0;
    result.lo = 0.0;
    result.hi = 0.0;
    result.warning = true;
    result.note = "r >= r_T: the zero control already reaches the target ball";
    result.attaining_control = ControlSignal::zero(ctx.model_ptr(), tau);
    return result;
  }

  const double eps = model.config.bisection_tolerance / 2.0;
  double lo = 0.0;
  double hi = (ctx.r_free() - r) /
              (min_coupling_diagonal(model) * (model.horizon() - tau));
  hi = std::max(hi, eps);
  OpSolution feasible_solution;
  int doublings = 0;
  while (true) {
    feasible_solution = ctx.solve(hi, tau);
    ++result.probe_count;
    if (feasible_solution.r_value <= r) break;
    if (!feasible_solution.converged) result.warning = true;
    lo = hi;
    hi *= 2.0;
    if (++doublings > kMaxDoublings) {
      throw std::runtime_error("solve_np: failed to bracket the optimal norm");
    }
  }
  double r_at_lo = lo == 0.0 ? ctx.r_free() : ctx.r_of(lo, tau);
  double r_at_hi = feasible_solution.r_value;
  while (hi - lo > eps) {
    const double mid = 0.5 * (lo + hi);
    OpSolution probe = ctx.solve(mid, tau);
    ++result.probe_count;
    if (!probe.converged) result.warning = true;
    if (probe.r_value <= r) {
      hi = mid;
      r_at_hi = probe.r_value;
      feasible_solution = std::move(probe);
    } else {
      lo = mid;
      r_at_lo = probe.r_value;
    }
  }
  // Regula-falsi pass inside the final bracket sharpens the inverse identity
  // r(M(tau, r), tau) = r well below the bracket width.
  const double refined = refine_root(
      [&](double m) {
        ++result.probe_count;
        return ctx.r_of(m, tau) - r;
      },
      lo, r_at_lo - r, hi, r_at_hi - r);
  result.value = refined;
  result.lo = lo;
  result.hi = hi;
  result.attaining_control = ctx.solve(refined, tau).control;
  return result;
}

ValueMapResult solve_tp(const ReachContext& ctx, double M, double r) {
  const Model& model = ctx.model();
  if (r <= 0.0 || r >= ctx.r_free()) {
    throw std::invalid_argument("solve_tp: r must lie in (0, r_T)");
  }
  if (M < 0.0) throw std::invalid_argument("solve_tp: M must be nonnegative");

  ValueMapResult result;
  OpSolution at_zero = ctx.solve(M, 0.0);
  ++result.probe_count;
  if (at_zero.r_value > r) {
    const ValueMapResult minimal = solve_np(ctx, 0.0, r);
    std::ostringstream msg;
    msg << "solve_tp: infeasible bound M = " << M
        << "; the minimal feasible bound is M(0, r) = " << minimal.value;
    throw std::invalid_argument(msg.str());
  }

  const double eps = model.config.bisection_tolerance / 2.0;
  double lo = 0.0;
  double hi = model.horizon();
  double r_at_lo = at_zero.r_value;
  double r_at_hi = ctx.r_free();  // empty action window
  OpSolution feasible_solution = std::move(at_zero);
  while (hi - lo > eps) {
    const double mid = 0.5 * (lo + hi);
    OpSolution probe = ctx.solve(M, mid);
    ++result.probe_count;
    if (!probe.converged) result.warning = true;
    if (probe.r_value <= r) {
      lo = mid;
      r_at_lo = probe.r_value;
      feasible_solution = std::move(probe);
    } else {
      hi = mid;
      r_at_hi = probe.r_value;
    }
  }
  const double refined = refine_root(
      [&](double t) {
        ++result.probe_count;
        return ctx.r_of(M, t) - r;
      },
      lo, r_at_lo - r, hi, r_at_hi - r);
  result.value = refined;
  result.lo = lo;
  result.hi = hi;
  result.attaining_control = ctx.solve(M, refined).control;
  return result;
}

ValueMapResult m_tau(const ReachContext& ctx, double tau) {
  const Model& model = ctx.model();
  if (tau < 0.0 || tau >= model.horizon()) {
    throw std::invalid_argument("m_tau: tau must lie in [0, T)");
  }
  const double eta_abs = model.config.reach_tolerance * ctx.r_free();
  const double eps = model.config.bisection_tolerance / 2.0;

  ValueMapResult result;
  double lo = 0.0;
  double hi = ctx.r_free() /
              (min_coupling_diagonal(model) * (model.horizon() - tau));
  hi = std::max(hi, eps);
  ReachProbe feasible;
  int uncertified = 0;
  int doublings = 0;
  while (true) {
    feasible = ctx.probe(hi, tau, eta_abs);
    ++result.probe_count;
    if (!feasible.certified) ++uncertified;
    if (feasible.reached) break;
    lo = hi;
    hi *= 2.0;
    if (++doublings > kMaxDoublings) {
      throw std::runtime_error("m_tau: failed to bracket the exact-reach norm");
    }
  }
  while (hi - lo > eps) {
    const double mid = 0.5 * (lo + hi);
    ReachProbe probe = ctx.probe(mid, tau, eta_abs);
    ++result.probe_count;
    if (!probe.certified) ++uncertified;
    if (probe.reached) {
      hi = mid;
      feasible = std::move(probe);
    } else {
      lo = mid;
    }
  }
  result.value = hi;
  result.lo = lo;
  result.hi = hi;
  result.attaining_control = feasible.solution.control;
  if (uncertified > 0) {
    result.note = std::to_string(uncertified) +
                  " probes near the threshold decided by the dual bound";
  }
  return result;
}

ValueMapResult solve_tocp(const ModelConfig& base, const CVec& y0, double M) {
  if (!(M > 0.0)) throw std::invalid_argument("solve_tocp: M must be positive");
  ValueMapResult result;
  const double y0_norm = y0.norm();
  if (y0_norm == 0.0) {
    result.note = "y0 = 0: already at the target";
    return result;
  }
  const double eta_abs = base.reach_tolerance * y0_norm;
  const double eps = base.bisection_tolerance / 2.0;
  const CVec target = CVec::Zero(y0.size());

  auto probe_at = [&](double horizon) {
    ModelPtr model = rebuild_with_horizon(base, horizon);
    OpProblem problem{model, y0, target, M, 0.0};
    return reach_probe(problem, eta_abs);
  };

  double lo = 0.0;  // zero horizon cannot reach a nonzero y0
  const RMat coupling =
      coupling_matrix(base.omega, base.num_modes, base.domain_length);
  double hi = y0_norm / (min_coupling_diagonal(coupling) * M);
  hi = std::max(hi, eps);
  ReachProbe feasible;
  int uncertified = 0;
  int doublings = 0;
  while (true) {
    feasible = probe_at(hi);
    ++result.probe_count;
    if (!feasible.certified) ++uncertified;
    if (feasible.reached) break;
    lo = hi;
    hi *= 2.0;
    if (++doublings > kMaxDoublings) {
      throw std::runtime_error("solve_tocp: failed to bracket the minimal time");
    }
  }
  while (hi - lo > eps) {
    const double mid = 0.5 * (lo + hi);
    ReachProbe probe = probe_at(mid);
    ++result.probe_count;
    if (!probe.certified) ++uncertified;
    if (probe.reached) {
      hi = mid;
      feasible = std::move(probe);
    } else {
      lo = mid;
    }
  }
  result.value = hi;
  result.lo = lo;
  result.hi = hi;
  result.attaining_control = feasible.solution.control;
  if (uncertified > 0) {
    result.note = std::to_string(uncertified) +
                  " probes near the threshold decided by the dual bound";
  }
  return result;
}

ValueMapResult solve_nocp(const ModelConfig& base, const CVec& y0,
                          double horizon) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("solve_nocp: horizon must be positive");
  }
  ValueMapResult result;
  const double y0_norm = y0.norm();
  if (y0_norm == 0.0) {
    result.note = "y0 = 0: already at the target";
    return result;
  }
  ModelPtr model = rebuild_with_horizon(base, horizon);
  const double eta_abs = base.reach_tolerance * y0_norm;
  const double eps = base.bisection_tolerance / 2.0;
  const CVec target = CVec::Zero(y0.size());

  auto probe_at = [&](double M) {
    OpProblem problem{model, y0, target, M, 0.0};
    return reach_probe(problem, eta_abs);
  };

  double lo = 0.0;
  double hi = y0_norm / (min_coupling_diagonal(*model) * horizon);
  hi = std::max(hi, eps);
  ReachProbe feasible;
  int uncertified = 0;
  int doublings = 0;
  while (true) {
    feasible = probe_at(hi);
    ++result.probe_count;
    if (!feasible.certified) ++uncertified;
    if (feasible.reached) break;
    lo = hi;
    hi *= 2.0;
    if (++doublings > kMaxDoublings) {
      throw std::runtime_error("solve_nocp: failed to bracket the minimal norm");
    }
  }
  while (hi - lo > eps) {
    const double mid = 0.5 * (lo + hi);
    ReachProbe probe = probe_at(mid);
    ++result.probe_count;
    if (!probe.certified) ++uncertified;
    if (probe.reached) {
      hi = mid;
      feasible = std::move(probe);
    } else {
      lo = mid;
    }
  }
  result.value = hi;
  result.lo = lo;
  result.hi = hi;
  result.attaining_control = feasible.solution.control;
  if (uncertified > 0) {
    result.note = std::to_string(uncertified) +
                  " probes near the threshold decided by the dual bound";
  }
  return result;
}

double latest_feasible_tau(const ReachContext& ctx, const ControlSignal& u,
                           double r) {
  const Model& model = ctx.model();
  const double horizon = model.horizon();
  auto reaches_at = [&](double tau) {
    ControlSignal shifted = u;
    shifted.activation_time = tau;
    const Trajectory trajectory = solve_forward(model, ctx.y0(), shifted);
    return (trajectory.terminal() - ctx.z_d()).norm() <= r;
  };
  if (!reaches_at(0.0)) {
    throw std::invalid_argument(
        "latest_feasible_tau: control infeasible already at tau = 0");
  }
  const double eps = model.config.bisection_tolerance / 2.0;
  if (ctx.r_free() <= r) return horizon - eps;  // every activation time works
  double lo = 0.0;
  double hi = horizon;
  while (hi - lo > eps) {
    const double mid = 0.5 * (lo + hi);
    if (reaches_at(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

MapSample sample_map(MapKind kind, const std::vector<double>& grid,
                     const MapParams& params, int parallelism) {
  if (grid.empty()) throw std::invalid_argument("sample_map: empty grid");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("sample_map: grid must be sorted ascending");
  }
  MapSample sample;
  sample.kind = kind;
  sample.grid = grid;
  sample.values.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  sample.status.assign(grid.size(), "ok");

  auto evaluate = [&](double x) -> double {
    switch (kind) {
      case MapKind::r_of_M: {
        ReachContext ctx(params.model, params.y0, params.z_d);
        return ctx.r_of(x, params.tau);
      }
      case MapKind::M_of_tau: {
        ReachContext ctx(params.model, params.y0, params.z_d);
        return solve_np(ctx, x, params.r).value;
      }
      case MapKind::tau_of_M: {
        ReachContext ctx(params.model, params.y0, params.z_d);
        return solve_tp(ctx, x, params.r).value;
      }
      case MapKind::M_sup_tau: {
        ReachContext ctx(params.model, params.y0, params.z_d);
        return m_tau(ctx, x).value;
      }
      case MapKind::T_of_M:
        return solve_tocp(params.model->config, params.y0, x).value;
      case MapKind::M_of_T:
        return solve_nocp(params.model->config, params.y0, x).value;
    }
    throw std::invalid_argument("sample_map: unknown kind");
  };

  auto run_point = [&](std::size_t i) {
    try {
      sample.values[i] = evaluate(grid[i]);
    } catch (const std::exception& e) {
      sample.status[i] = std::string("error: ") + e.what();
    }
  };

  const int workers = std::max(
      1, std::min<int>(parallelism, static_cast<int>(grid.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) run_point(i);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex next_mutex;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        while (true) {
          std::size_t i;
          {
            std::lock_guard<std::mutex> lock(next_mutex);
            if (next >= grid.size()) return;
            i = next++;
          }
          run_point(i);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }
  return sample;
}

}  // namespace octl
