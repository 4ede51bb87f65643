// dynamics.hpp — controlled forward solves, adjoint flow, and the duality
// pairing on the shared time grid. Controls are piecewise constant on the K
// grid intervals and act only on (tau, T); the interval straddling tau is
// split analytically, so every solve is exact for this control class.

#pragma once

#include "octl/spectral_model.hpp"

namespace octl {

// Piecewise-constant control: one length-N coefficient vector per grid
// interval, active on (activation_time, T). Values stored on intervals that
// end before the activation time are ignored.
struct ControlSignal {
  ModelPtr model;           // grid provider
  std::vector<CVec> values; // size K, each length N
  double activation_time = 0.0;

  static ControlSignal zero(ModelPtr model, double tau = 0.0);

  // max over intervals intersecting (tau, T) of the interval vector norm
  double sup_norm() const;
};

struct Trajectory {
  std::vector<CVec> states;  // K+1 states at the grid nodes
  const CVec& terminal() const { return states.back(); }
};

// One active slice of the grid: interval `index` restricted to (begin, end).
struct ActiveSlice {
  int index;
  double begin;
  double end;
  double length() const { return end - begin; }
};

// Intervals intersecting (tau, T); the first slice may be partial.
std::vector<ActiveSlice> active_slices(const Model& model, double tau);

// Weight that a constant unit drive on (a, b) contributes to y(T):
//   (e^{i lambda (T-a)} - e^{i lambda (T-b)}) / (i lambda).
Complex terminal_weight(double lambda, double horizon, double a, double b);

Trajectory solve_forward(const Model& model, const CVec& y0,
                         const ControlSignal& signal);

// Backward free flow from the terminal datum: phi(t) = free flow of phi(T)
// propagated by t - T. Norm is preserved at every node.
Trajectory solve_adjoint(const Model& model, const CVec& phi_terminal);

// Exact integrals g_j of the adjoint state over the active part of each
// interval, for the pairing Re sum_j <B g_j, u_j>. Inactive intervals get a
// zero vector.
std::vector<CVec> adjoint_interval_integrals(const Model& model,
                                             const CVec& phi_terminal,
                                             double tau);

// Re integral of <B phi(t), u(t) - v(t)> over the common active window; for an
// optimal control u* this is nonnegative against every admissible v.
double pairing_residual(const Model& model, const ControlSignal& u,
                        const ControlSignal& v, const Trajectory& phi);

// max over intervals intersecting (max(tau_u, tau_v), T) of the interval
// vector distance; the metric used for "same optimal control" checks.
double control_distance(const ControlSignal& u, const ControlSignal& v);

}  // namespace octl
