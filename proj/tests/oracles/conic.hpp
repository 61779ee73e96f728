#pragma once

#include <Eigen/Dense>

#include <vector>

// Generic cone-program solver used only as a cross-check oracle. Independent
// of the library's solvers: it runs ADMM on the homogeneous self-dual
// embedding of the primal-dual pair
//   min c^T x  s.t.  A x + s = b,  s in K,
// with K a product of zero, nonnegative, and second-order cones (in that
// row order). Slow but reliable at desk scale.
namespace oracles {

struct ConeSpec {
  int zero = 0;
  int nonneg = 0;
  std::vector<int> socs;

  int dim() const {
    int m = zero + nonneg;
    for (int q : socs) m += q;
    return m;
  }
};

struct ConicResult {
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // dual multipliers
  Eigen::VectorXd s;
  double primal_obj = 0.0;
  long iterations = 0;
  double pres = 0.0, dres = 0.0, gap = 0.0;
  bool converged = false;
};

ConicResult solve_conic(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                        const Eigen::VectorXd& c, const ConeSpec& K, double tol = 1e-9,
                        long max_iters = 2000000);

}  // namespace oracles
