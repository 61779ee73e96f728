#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "relucvx/core.hpp"
#include "relucvx/patterns.hpp"

namespace relucvx {

using Blocks = std::vector<Eigen::VectorXd>;

/// Solution of the gated problem
///   min_w 1/2 || sum_i D_i X w_i - y ||^2 + beta sum_i ||w_i||_2.
/// `dual_vector` is the residual y - sum_i D_i X w_i; kkt_residual is the
/// worst block violation of the stationarity / dual-feasibility conditions,
/// measured relative to beta.
struct GatedSolution {
  Blocks weights;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  Eigen::VectorXd dual_vector;
  bool certified = false;
};

/// Cone-constrained solution: pairs (u_i, v_i) with u_i, v_i in K_{D_i}.
struct ConeSolution {
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
  double objective = 0.0;
  double kkt_residual = 0.0;
  double cone_violation = 0.0;
  double cone_scale = 0.0;  // max_i ||X u_i||_inf, reference for cone_violation
  int iterations = 0;
  bool certified = false;
};

double gated_objective(const Dataset& ds, const PatternSet& ps, const Blocks& w);
double cone_objective(const Dataset& ds, const PatternSet& ps,
                      const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs);

/// Accelerated proximal gradient (block soft-thresholding) with gradient
/// restart. Step from the Lipschitz bound of the stacked operator, or
/// backtracking per cfg.step_rule. beta == 0 routes to the least-norm fit.
/// The returned iterate is the best objective seen, so warm starts never
/// increase the reported value.
GatedSolution solve_gated(const Dataset& ds, const PatternSet& ps, const SolverConfig& cfg,
                          const Blocks* warm_start = nullptr);

struct L2Solution {
  double value = 0.0;
  Blocks weights;
  Eigen::VectorXd dual;
};

/// Closed form of the l2-regularized gated problem via one SPD solve:
/// lambda = beta (beta I + sum_i D_i X X^T D_i)^{-1} y, u_i = X^T D_i lambda / beta,
/// value = beta/2 * y^T (beta I + sum_i D_i X X^T D_i)^{-1} y.
L2Solution solve_gated_l2(const Dataset& ds, const PatternSet& ps);

struct FitResult {
  bool fit = false;
  Blocks weights;
  double residual = 0.0;
};

/// Least-norm least-squares solve of sum_i D_i X w_i = y on the stacked
/// operator; "fit" when the residual is <= 1e-8 ||y||.
FitResult exact_fit(const Dataset& ds, const PatternSet& ps);

/// Accelerated splitting on the cone-constrained problem: each iteration
/// takes a gradient step on the smooth part, projects every block onto its
/// polyhedral cone (an exact NNLS solve), and applies the group soft
/// threshold -- the projection-then-shrinkage composition is the exact prox
/// of beta||.|| + indicator(K) because K is a cone. Certification measures
/// the distance of each block's negative gradient to the subdifferential
/// plus normal cone, relative to beta.
ConeSolution solve_cone_constrained(const Dataset& ds, const PatternSet& ps,
                                    const SolverConfig& cfg,
                                    const ConeSolution* warm_start = nullptr);

struct KktReport {
  double max_violation = 0.0;           // relative to beta, same scale as tol_kkt
  std::vector<double> block_violations;
  double dual_gap = 0.0;                // primal value minus feasible dual value
};

/// Recomputes the optimality conditions of a gated solution from scratch:
/// for active blocks X^T D_i lambda = beta w_i/||w_i||, for zero blocks
/// ||X^T D_i lambda|| <= beta.
KktReport verify_kkt_gated(const Dataset& ds, const PatternSet& ps, const GatedSolution& sol);

}  // namespace relucvx
