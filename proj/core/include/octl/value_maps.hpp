// value_maps.hpp — the five scalar value maps tying the control problems
// together: M(tau, r), tau(M, r), M^tau, T_M, M_T. Each is computed by
// bisection over a strictly monotone predicate built on the optimal-distance
// solver; exact-reach targets are relaxed to the tolerance eta from the model
// configuration. Returned values are the certified-feasible endpoint of the
// final bracket.

#pragma once

#include "octl/op_solver.hpp"

#include <map>
#include <mutex>
#include <string>

namespace octl {

struct ValueMapResult {
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  ControlSignal attaining_control;
  int probe_count = 0;
  bool warning = false;
  std::string note;
};

enum class MapKind { r_of_M, M_of_tau, tau_of_M, M_sup_tau, T_of_M, M_of_T };

std::string to_string(MapKind kind);
MapKind map_kind_from_string(const std::string& name);

struct MapSample {
  MapKind kind = MapKind::r_of_M;
  std::vector<double> grid;
  std::vector<double> values;        // NaN where a point failed
  std::vector<std::string> status;   // "ok" or the error message
};

// Shared problem data for one (model, y0, z_d) with a per-run memo of
// r(M, tau) values; safe for concurrent use.
class ReachContext {
 public:
  ReachContext(ModelPtr model, CVec y0, CVec z_d);

  const Model& model() const { return *model_; }
  ModelPtr model_ptr() const { return model_; }
  const CVec& y0() const { return y0_; }
  const CVec& z_d() const { return z_d_; }
  double r_free() const { return r_free_; }

  // memoized optimal distance r(M, tau)
  double r_of(double M, double tau) const;
  // full solve with the attaining control (not memoized)
  OpSolution solve(double M, double tau) const;
  // certified decision of r(M, tau) <= eta_abs
  ReachProbe probe(double M, double tau, double eta_abs) const;

 private:
  ModelPtr model_;
  CVec y0_, z_d_;
  double r_free_;
  mutable std::map<std::pair<double, double>, double> cache_;
  mutable std::mutex mutex_;
};

// Optimal norm M(tau, r): minimal bound reaching the ball B(z_d, r).
// r >= r_free returns 0 with a warning; r <= 0 is rejected (that regime is
// the exact-reach map m_tau).
ValueMapResult solve_np(const ReachContext& ctx, double tau, double r);

// Optimal time tau(M, r): latest activation still reaching B(z_d, r).
// Requires M >= M(0, r); the error message names the minimal feasible bound.
ValueMapResult solve_tp(const ReachContext& ctx, double M, double r);

// M^tau: minimal bound for exact reach of z_d (within eta) acting on (tau, T).
ValueMapResult m_tau(const ReachContext& ctx, double tau);

// Minimal time T_M to steer y0 to zero with bound M; the horizon probes
// rebuild the grid at the base configuration's node density.
ValueMapResult solve_tocp(const ModelConfig& base, const CVec& y0, double M);

// Minimal norm M_T to steer y0 to zero by time `horizon`.
ValueMapResult solve_nocp(const ModelConfig& base, const CVec& y0,
                          double horizon);

// Latest activation time keeping a FIXED control feasible for B(z_d, r).
double latest_feasible_tau(const ReachContext& ctx, const ControlSignal& u,
                           double r);

struct MapParams {
  ModelPtr model;
  CVec y0;
  CVec z_d;
  double tau = 0.0;  // fixed tau for r_of_M
  double r = 0.0;    // fixed r for M_of_tau and tau_of_M
};

// Evaluates one value map on a sorted grid; per-point failures become error
// entries and the run continues. Points are independent and may be evaluated
// concurrently (`parallelism` caps the worker count).
MapSample sample_map(MapKind kind, const std::vector<double>& grid,
                     const MapParams& params, int parallelism = 1);

}  // namespace octl
