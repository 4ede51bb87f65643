#include "octl/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace octl {

ControlSignal ControlSignal::zero(ModelPtr model, double tau) {
  ControlSignal signal;
  signal.model = std::move(model);
  signal.activation_time = tau;
  signal.values.assign(signal.model->intervals(),
                       CVec::Zero(signal.model->modes()));
  return signal;
}

double ControlSignal::sup_norm() const {
  double sup = 0.0;
  for (const ActiveSlice& slice : active_slices(*model, activation_time)) {
    sup = std::max(sup, values[slice.index].norm());
  }
  return sup;
}

std::vector<ActiveSlice> active_slices(const Model& model, double tau) {
  std::vector<ActiveSlice> slices;
  const int intervals = model.intervals();
  for (int j = 0; j < intervals; ++j) {
    const double t0 = model.time_grid[j];
    const double t1 = model.time_grid[j + 1];
    if (t1 <= tau) continue;
    slices.push_back({j, std::max(t0, tau), t1});
  }
  return slices;
}

Complex terminal_weight(double lambda, double horizon, double a, double b) {
  const Complex pa = std::polar(1.0, lambda * (horizon - a));
  const Complex pb = std::polar(1.0, lambda * (horizon - b));
  return (pa - pb) / Complex(0.0, lambda);
}

Trajectory solve_forward(const Model& model, const CVec& y0,
                         const ControlSignal& signal) {
  if (!signal.model || !signal.model->same_grid(model)) {
    throw std::invalid_argument("solve_forward: signal grid does not match model");
  }
  if (y0.size() != model.modes()) {
    throw std::invalid_argument("solve_forward: initial state has wrong length");
  }
  const double tau = signal.activation_time;
  Trajectory trajectory;
  trajectory.states.reserve(model.intervals() + 1);
  trajectory.states.push_back(y0);
  CVec y = y0;
  for (int j = 0; j < model.intervals(); ++j) {
    const double t0 = model.time_grid[j];
    const double t1 = model.time_grid[j + 1];
    if (t1 <= tau) {
      y = free_propagate(model, y, t1 - t0);
    } else if (t0 < tau) {
      // Straddled interval: free up to tau, then controlled to t1.
      y = free_propagate(model, y, tau - t0);
      y = duhamel_interval(model, y, signal.values[j], tau, t1);
    } else {
      y = duhamel_interval(model, y, signal.values[j], t0, t1);
    }
    trajectory.states.push_back(y);
  }
  return trajectory;
}

Trajectory solve_adjoint(const Model& model, const CVec& phi_terminal) {
  const double horizon = model.horizon();
  Trajectory trajectory;
  trajectory.states.reserve(model.intervals() + 1);
  for (int j = 0; j <= model.intervals(); ++j) {
    trajectory.states.push_back(
        free_propagate(model, phi_terminal, model.time_grid[j] - horizon));
  }
  return trajectory;
}

std::vector<CVec> adjoint_interval_integrals(const Model& model,
                                             const CVec& phi_terminal,
                                             double tau) {
  const int n = model.modes();
  std::vector<CVec> integrals(model.intervals(), CVec::Zero(n));
  const double horizon = model.horizon();
  for (const ActiveSlice& slice : active_slices(model, tau)) {
    CVec g(n);
    for (int k = 0; k < n; ++k) {
      // integral of e^{-i lambda (T-t)} over (begin, end)
      g[k] = std::conj(terminal_weight(model.eigenvalues[k], horizon,
                                       slice.begin, slice.end)) *
             phi_terminal[k];
    }
    integrals[slice.index] = g;
  }
  return integrals;
}

double pairing_residual(const Model& model, const ControlSignal& u,
                        const ControlSignal& v, const Trajectory& phi) {
  if (!u.model || !u.model->same_grid(model) || !v.model ||
      !v.model->same_grid(model)) {
    throw std::invalid_argument("pairing_residual: signals must share the model grid");
  }
  const double tau = std::max(u.activation_time, v.activation_time);
  const auto integrals =
      adjoint_interval_integrals(model, phi.terminal(), tau);
  double residual = 0.0;
  for (const ActiveSlice& slice : active_slices(model, tau)) {
    const CVec weighted = model.coupling * integrals[slice.index];
    residual +=
        (weighted.dot(u.values[slice.index]) - weighted.dot(v.values[slice.index]))
            .real();
  }
  return residual;
}

double control_distance(const ControlSignal& u, const ControlSignal& v) {
  if (!u.model || !v.model || !u.model->same_grid(*v.model)) {
    throw std::invalid_argument("control_distance: signals must share a grid");
  }
  const double tau = std::max(u.activation_time, v.activation_time);
  double dist = 0.0;
  for (const ActiveSlice& slice : active_slices(*u.model, tau)) {
    dist = std::max(dist,
                    (u.values[slice.index] - v.values[slice.index]).norm());
  }
  return dist;
}

}  // namespace octl
