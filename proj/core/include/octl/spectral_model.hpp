// spectral_model.hpp — sine-eigenbasis truncation of the internally controlled
// Schrodinger system on the interval (0, L) with Dirichlet boundary conditions.
//
// State coordinates are the coefficients of y in the orthonormal eigenbasis
// e_k(x) = sqrt(2/L) sin(k pi x / L); with L = pi the eigenvalues are
// lambda_k = k^2 and the Euclidean norm of the coefficient vector equals the
// L^2 norm of y (Parseval). The control enters through the Galerkin projection
// B of the indicator of the control region omega. Propagation over an interval
// with constant control uses the closed-form Duhamel integral, so there is no
// time-stepping error.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace octl {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

// Thrown for invalid configuration (bad omega, non-positive sizes, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Open subinterval (lo, hi) of the spatial domain.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct ModelConfig {
  double domain_length = kPi;
  int num_modes = 1;                  // N
  std::vector<Interval> omega;        // disjoint open subintervals of (0, L)
  double horizon = 1.0;               // T
  int num_time_intervals = 128;       // K
  double reach_tolerance = 1e-6;      // eta, relative to the steered norm
  double bisection_tolerance = 1e-4;  // eps_bis
  double fw_gap_tolerance = 1e-10;    // eps_fw
  int max_fw_iterations = 20000;
  double vertex_threshold = 1e-12;    // zeta, relative to ||phi(T)||

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct Model {
  RVec eigenvalues;  // lambda_k = k^2, strictly increasing, lambda_1 >= 1
  RMat coupling;     // B: symmetric positive semidefinite, spectrum in [0, 1]
  RVec time_grid;    // K+1 equispaced nodes on [0, T]
  ModelConfig config;

  int modes() const { return static_cast<int>(eigenvalues.size()); }
  int intervals() const { return config.num_time_intervals; }
  double horizon() const { return config.horizon; }
  double dt() const { return config.horizon / config.num_time_intervals; }

  bool same_grid(const Model& other) const;
};

using ModelPtr = std::shared_ptr<const Model>;

// Galerkin projection of the indicator of omega onto the first N sine modes,
// evaluated with the closed-form antiderivative of sin(jx) sin(kx).
RMat coupling_matrix(const std::vector<Interval>& omega, int num_modes,
                     double domain_length = kPi);

ModelPtr build_model(const ModelConfig& config);

// Componentwise y_k <- exp(i lambda_k dt) y_k. dt may be negative (the
// adjoint flow is the free flow run backward).
CVec free_propagate(const CVec& state, const RVec& eigenvalues, double dt);
CVec free_propagate(const Model& model, const CVec& state, double dt);

// Exact variation-of-constants step over [t0, t1] with a constant control:
//   y(t1) = e^{i lambda (t1-t0)} y(t0)
//         + (e^{i lambda (t1-t0)} - 1) / (i lambda) * (B control).
CVec duhamel_interval(const Model& model, const CVec& state,
                      const CVec& control_value, double t0, double t1);

}  // namespace octl
