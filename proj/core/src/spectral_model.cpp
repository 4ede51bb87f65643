#include "octl/spectral_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace octl {

namespace {

// Antiderivative of (2/L) sin(j pi x / L) sin(k pi x / L).
double sine_product_antiderivative(int j, int k, double x, double length) {
  const double wj = j * kPi / length;
  const double wk = k * kPi / length;
  if (j == k) {
    return (2.0 / length) * (x / 2.0 - std::sin(2.0 * wj * x) / (4.0 * wj));
  }
  const double wm = wj - wk;
  const double wp = wj + wk;
  return (2.0 / length) *
         (std::sin(wm * x) / (2.0 * wm) - std::sin(wp * x) / (2.0 * wp));
}

}  // namespace

void ModelConfig::validate() const {
  std::ostringstream msg;
  if (!(domain_length > 0.0)) throw ConfigError("model.domain_length must be positive");
  if (num_modes < 1) throw ConfigError("model.num_modes must be at least 1");
  if (num_time_intervals < 1) throw ConfigError("model.num_time_intervals must be at least 1");
  if (!(horizon > 0.0)) throw ConfigError("model.horizon must be positive");
  if (!(reach_tolerance > 0.0)) throw ConfigError("model.reach_tolerance must be positive");
  if (!(bisection_tolerance > 0.0)) throw ConfigError("model.bisection_tolerance must be positive");
  if (!(fw_gap_tolerance > 0.0)) throw ConfigError("model.fw_gap_tolerance must be positive");
  if (max_fw_iterations < 1) throw ConfigError("model.max_fw_iterations must be at least 1");
  if (!(vertex_threshold > 0.0)) throw ConfigError("model.vertex_threshold must be positive");
  if (omega.empty()) throw ConfigError("model.omega must contain at least one subinterval");

  auto sorted = omega;
  std::sort(sorted.begin(), sorted.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const Interval& iv = sorted[i];
    if (!(iv.lo < iv.hi)) {
      msg << "model.omega[" << i << "] is empty: (" << iv.lo << ", " << iv.hi << ")";
      throw ConfigError(msg.str());
    }
    if (iv.lo < 0.0 || iv.hi > domain_length) {
      msg << "model.omega[" << i << "] out of range (0, " << domain_length << ")";
      throw ConfigError(msg.str());
    }
    if (i > 0 && !(sorted[i - 1].hi <= iv.lo)) {
      msg << "model.omega subintervals overlap near x = " << iv.lo;
      throw ConfigError(msg.str());
    }
  }
}

RMat coupling_matrix(const std::vector<Interval>& omega, int num_modes,
                     double domain_length) {
  // Full-domain omega projects to the identity exactly.
  bool full = omega.size() == 1 && omega.front().lo == 0.0 &&
              omega.front().hi == domain_length;
  if (full) return RMat::Identity(num_modes, num_modes);

  RMat b = RMat::Zero(num_modes, num_modes);
  for (int j = 0; j < num_modes; ++j) {
    for (int k = j; k < num_modes; ++k) {
      double sum = 0.0;
      for (const Interval& iv : omega) {
        sum += sine_product_antiderivative(j + 1, k + 1, iv.hi, domain_length) -
               sine_product_antiderivative(j + 1, k + 1, iv.lo, domain_length);
      }
      b(j, k) = sum;
      b(k, j) = sum;
    }
  }
  return b;
}

ModelPtr build_model(const ModelConfig& config) {
  config.validate();
  auto model = std::make_shared<Model>();
  model->config = config;
  const int n = config.num_modes;
  model->eigenvalues.resize(n);
  for (int k = 0; k < n; ++k) {
    const double mode = (k + 1) * kPi / config.domain_length;
    model->eigenvalues[k] = mode * mode;
  }
  model->coupling = coupling_matrix(config.omega, n, config.domain_length);
  const int intervals = config.num_time_intervals;
  model->time_grid.resize(intervals + 1);
  for (int j = 0; j <= intervals; ++j) {
    model->time_grid[j] = config.horizon * j / intervals;
  }
  return model;
}

bool Model::same_grid(const Model& other) const {
  return modes() == other.modes() &&
         config.num_time_intervals == other.config.num_time_intervals &&
         config.horizon == other.config.horizon;
}

CVec free_propagate(const CVec& state, const RVec& eigenvalues, double dt) {
  CVec out(state.size());
  for (Eigen::Index k = 0; k < state.size(); ++k) {
    out[k] = std::polar(1.0, eigenvalues[k] * dt) * state[k];
  }
  return out;
}

CVec free_propagate(const Model& model, const CVec& state, double dt) {
  return free_propagate(state, model.eigenvalues, dt);
}

CVec duhamel_interval(const Model& model, const CVec& state,
                      const CVec& control_value, double t0, double t1) {
  if (!(t1 > t0)) throw std::invalid_argument("duhamel_interval: t1 must exceed t0");
  const double delta = t1 - t0;
  const CVec driven = model.coupling * control_value;
  CVec out(state.size());
  for (Eigen::Index k = 0; k < state.size(); ++k) {
    const double lambda = model.eigenvalues[k];
    const Complex phase = std::polar(1.0, lambda * delta);
    // lambda_k >= 1 under Dirichlet conditions, so no small-lambda branch.
    out[k] = phase * state[k] + (phase - 1.0) / Complex(0.0, lambda) * driven[k];
  }
  return out;
}

}  // namespace octl
