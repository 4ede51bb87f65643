// op_solver.hpp — optimal target problem: minimize ||y(T) - z_d|| over
// controls with per-interval norm bound M active on (tau, T). Solved by
// conditional gradient whose linear subproblem is the maximum-principle
// vertex; the duality gap certifies suboptimality of (1/2) distance^2.

#pragma once

#include "octl/dynamics.hpp"

#include <optional>
#include <utility>

namespace octl {

struct OpProblem {
  ModelPtr model;
  CVec y0;
  CVec z_d;
  double bound = 0.0;       // M
  double activation = 0.0;  // tau
};

struct OpSolution {
  ControlSignal control;
  double r_value = 0.0;                // achieved ||y(T) - z_d||
  double fw_gap = 0.0;                 // certified suboptimality of (1/2) r^2
  double bang_bang_deviation = 0.0;    // max | ||u_j|| - M | on certifiable intervals
  double max_principle_residual = 0.0; // max ( M ||B g_j|| - Re<B g_j, u_j> )
  int iterations = 0;
  bool converged = false;
};

// Affine map from active interval controls to the terminal residual
// y(T) - z_d, with the pieces the solver and the value maps share: the exact
// per-interval weights, the free residual, and the Gram matrix of the map.
class TerminalMap {
 public:
  TerminalMap(ModelPtr model, const CVec& y0, const CVec& z_d, double tau);

  const Model& model() const { return *model_; }
  ModelPtr model_ptr() const { return model_; }
  double tau() const { return tau_; }
  const std::vector<ActiveSlice>& slices() const { return slices_; }
  const CVec& target_shift() const { return zeta_; }  // z_d - free flow of y0
  double free_residual() const { return r_free_; }    // ||target_shift||

  // residual y(T; u) - z_d for active-slice control blocks
  CVec residual(const std::vector<CVec>& blocks) const;

  // blocks h_j = B * integral of e^{-i lambda (T-t)} theta over slice j
  std::vector<CVec> adjoint_blocks(const CVec& theta) const;

  // exact-reach correction: blocks c with residual(u - c) = 0
  std::vector<CVec> reach_correction(const CVec& residual_vec) const;

  int block_count() const { return static_cast<int>(slices_.size()); }

 private:
  ModelPtr model_;
  double tau_;
  std::vector<ActiveSlice> slices_;
  std::vector<CVec> weights_;  // D_j per slice
  CVec zeta_;
  double r_free_;
  Eigen::MatrixXcd gram_;      // sum_j (D_j B)(D_j B)^H
  Eigen::LDLT<Eigen::MatrixXcd> gram_ldlt_;
};

OpSolution solve_op(const OpProblem& problem);
OpSolution solve_op(const OpProblem& problem, const ControlSignal& initial);

// Recomputes the certificates of a converged solution from its own adjoint:
// (bang_bang_deviation, max_principle_residual).
std::pair<double, double> verify_certificates(const OpSolution& solution,
                                              const OpProblem& problem);

// Certified decision of "r(M, tau) <= eta_abs". YES when the iterate reaches
// within eta_abs (it upper-bounds the optimum); NO when either the gap-based
// lower bound on r or the dual lower bound on the minimal reaching norm rules
// the probe out. `certified` is false only on iteration-cap fallback.
struct ReachProbe {
  bool reached = false;
  bool certified = false;
  OpSolution solution;
};
ReachProbe reach_probe(const OpProblem& problem, double eta_abs);

}  // namespace octl
