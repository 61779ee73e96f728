#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>

#include "relucvx/core.hpp"
#include "relucvx/patterns.hpp"

// Independent reference computations the test suites compare against. None
// of these share code with the library's solvers.
namespace oracles {

/// Optimal value of the gated group-lasso problem via the generic cone
/// solver (epigraph reformulation with one quadratic and P norm cones).
double gated_value_conic(const relucvx::Dataset& ds, const relucvx::PatternSet& ps,
                         double tol = 1e-9);

/// Optimal value of the cone-constrained problem via the generic cone solver.
double cone_value_conic(const relucvx::Dataset& ds, const relucvx::PatternSet& ps,
                        double tol = 1e-9);

/// Minimum-norm decomposition value min ||u|| + ||v||, u - v = w, both in the
/// pattern cone, via the generic cone solver.
double decomposition_value_conic(const relucvx::Dataset& ds, const relucvx::Pattern& D,
                                 const Eigen::VectorXd& w, double tol = 1e-9);

/// First-order (conjugate-gradient) solve of the l2-regularized gated
/// objective min 1/2 ||A w - y||^2 + beta/2 ||w||^2 on the stacked operator;
/// returns the optimal value.
double gated_l2_value_cg(const relucvx::Dataset& ds, const relucvx::PatternSet& ps);

/// Closed-form minimum of ||u|| + ||v|| over u - v = w with both in a planar
/// cone spanned by rays at angles phi1 < phi2 (opening below pi). The
/// boundary of the feasible region splits into four rays along which the
/// objective is nondecreasing, so each piece minimizes at its smallest
/// feasible parameter.
double planar_decomposition_value(double phi1, double phi2, const Eigen::Vector2d& w);

/// Dataset whose single all-active pattern has exactly the planar cone above.
relucvx::Dataset planar_cone_dataset(double phi1, double phi2);

struct McGram {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd stderr_;  // per-entry standard error of the mean
};

/// Monte Carlo estimate of E[D X X^T D] over Gaussian gates.
McGram mc_expected_gram(const relucvx::Dataset& ds, long draws, std::uint64_t seed);

/// Largest eigenvalue of a symmetric matrix by plain power iteration.
double power_lambda_max(const Eigen::MatrixXd& S, int iters = 20000);

/// Smallest eigenvalue via power iteration on sigma I - S.
double power_lambda_min(const Eigen::MatrixXd& S, int iters = 20000);

/// Distinct patterns reachable by dense random probing; saturates the full
/// arrangement on tiny instances.
relucvx::PatternSet dense_probe_patterns(const relucvx::Dataset& ds, long probes,
                                         std::uint64_t seed);

/// max_b b^T diag(y) X X^T diag(y) b recomputed entry-by-entry (no
/// incremental updates), for cross-checking the Gray-code walk.
double maxcut_direct(const relucvx::Dataset& ds);

}  // namespace oracles
