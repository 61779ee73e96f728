#pragma once

#include <Eigen/Dense>

namespace relucvx {

struct NnlsResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Lawson-Hanson active-set solve of min_{x >= 0} ||C x - e||_2. Finite
/// termination; `tol` gates the dual-feasibility test on the negative
/// gradient (scaled by ||C||_inf ||e||_inf when left at 0).
NnlsResult nnls(const Eigen::MatrixXd& C, const Eigen::VectorXd& e, double tol = 0.0,
                int max_outer = 0);

struct LdpResult {
  bool feasible = false;
  Eigen::VectorXd x;  // minimum-norm point with G x >= h (when feasible)
};

/// Least-distance problem min ||x|| s.t. G x >= h, reduced to NNLS on the
/// augmented matrix [G^T; h^T]. A zero NNLS residual certifies that the
/// constraint system is infeasible.
LdpResult ldp(const Eigen::MatrixXd& G, const Eigen::VectorXd& h);

/// Euclidean projection of z onto the polyhedron {x : G x >= h}. Throws if
/// the polyhedron is empty.
Eigen::VectorXd project_polyhedron(const Eigen::VectorXd& z, const Eigen::MatrixXd& G,
                                   const Eigen::VectorXd& h);

/// Projection onto the activation cone {x : B x >= 0}.
Eigen::VectorXd project_cone(const Eigen::VectorXd& z, const Eigen::MatrixXd& B);

}  // namespace relucvx
