#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "relucvx/core.hpp"
#include "relucvx/patterns.hpp"

namespace relucvx {

/// Minimum-norm cone decomposition w = u - v with u, v in K_D. norm_sum is
/// ||u|| + ||v||; sharpness = norm_sum / ||w|| (always >= 1 by the triangle
/// inequality, = 1 iff w lies in the cone).
struct Decomposition {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  double norm_sum = 0.0;
  double sharpness = 0.0;
  bool certified = false;
};

Decomposition decompose_min_norm(const Dataset& ds, const Pattern& D, const Eigen::VectorXd& w,
                                 const SolverConfig& cfg);

struct ChebyshevResult {
  bool feasible = false;
  Eigen::VectorXd u;
};

/// Feasibility of ||u|| <= 1, (2D - I) X u >= eps |(2D - I) X z| via a
/// minimum-norm solve; infeasible is a reported outcome, not an error.
ChebyshevResult chebyshev_feasibility(const Dataset& ds, const Pattern& D,
                                      const Eigen::VectorXd& z, double eps);

struct SharpnessReport {
  double value = 0.0;        // from decompose_min_norm
  double upper_bound = 0.0;  // 1 + 1/eps* over a logarithmic eps grid
  double eps_star = 0.0;     // largest grid eps that stayed feasible (0 if none)
  bool certified = false;
};

SharpnessReport cone_sharpness(const Dataset& ds, const Pattern& D, const Eigen::VectorXd& z,
                               const SolverConfig& cfg);

struct LambdaCheck {
  bool feasible = false;
  Eigen::VectorXd lambda;
  double norm = 0.0;
  double bound = 0.0;  // 5c
  bool within_bound = false;
};

/// Draws a d x d standard normal matrix from `seed` and solves
/// min ||lambda|| s.t. X lambda >= b, reporting whether the minimum-norm
/// solution stays within 5c. Statistical check only.
LambdaCheck lambda_construction_check(int d, const Eigen::VectorXd& b, double c,
                                      std::uint64_t seed);

}  // namespace relucvx
