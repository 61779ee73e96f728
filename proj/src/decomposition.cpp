#include "relucvx/decomposition.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "relucvx/nnls.hpp"
#include "relucvx/rng.hpp"

namespace relucvx {

namespace {

// min_u sqrt(||u||^2 + mu^2) + sqrt(||u - w||^2 + mu^2) over
// {u : B u >= 0, B (u - w) >= 0} by projected accelerated gradient with a
// shrinking smoothing parameter. The feasible set is the cone intersected
// with its translate, so the projection is one polyhedral LDP solve.
Eigen::VectorXd smoothed_min(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                             const Eigen::VectorXd& w, Eigen::VectorXd u, int iters_per_stage,
                             double stage_exit, double* final_residual) {
  const double wn = w.norm();
  const auto phi = [&](const Eigen::VectorXd& x) { return x.norm() + (x - w).norm(); };
  double best_phi = phi(u);
  Eigen::VectorXd best = u;
  double res = std::numeric_limits<double>::infinity();
  for (double mu = 0.25 * wn; mu > 1e-8 * wn; mu *= 0.2) {
    const double step = 0.5 * mu;  // 1/L with L = 2/mu
    Eigen::VectorXd yv = u;
    double t = 1.0;
    for (int k = 0; k < iters_per_stage; ++k) {
      const Eigen::VectorXd bvec = yv - w;
      const Eigen::VectorXd grad = yv / std::sqrt(yv.squaredNorm() + mu * mu) +
                                   bvec / std::sqrt(bvec.squaredNorm() + mu * mu);
      Eigen::VectorXd u_new = project_polyhedron(yv - step * grad, G, h);
      if ((yv - u_new).dot(u_new - u) > 0.0) {
        t = 1.0;
        yv = u_new;
      } else {
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        yv = u_new + ((t - 1.0) / t_new) * (u_new - u);
        t = t_new;
      }
      res = (u_new - u).norm() / (step * (1.0 + u.norm()));
      u = std::move(u_new);
      const double p = phi(u);
      if (p < best_phi) {
        best_phi = p;
        best = u;
      }
      if (res <= stage_exit) break;
    }
  }
  if (final_residual) *final_residual = res;
  return best;
}

}  // namespace

Decomposition decompose_min_norm(const Dataset& ds, const Pattern& D, const Eigen::VectorXd& w,
                                 const SolverConfig& cfg) {
  if (w.size() != ds.d()) throw std::invalid_argument("decompose_min_norm: dimension mismatch");
  const double wn = w.norm();
  if (wn == 0.0) throw std::invalid_argument("decompose_min_norm: w must be nonzero");

  const Eigen::MatrixXd B = D.signed_rows(ds.X);
  Decomposition out;

  // ||u|| + ||v|| >= ||w|| always, with equality attainable exactly when w or
  // -w lies in the cone: (w, 0) and (0, -w) are the two trivial optima.
  if (((B * w).array() >= 0.0).all()) {
    out.u = w;
    out.v = Eigen::VectorXd::Zero(ds.d());
    out.norm_sum = wn;
    out.sharpness = 1.0;
    out.certified = true;
    return out;
  }
  if (((B * -w).array() >= 0.0).all()) {
    out.u = Eigen::VectorXd::Zero(ds.d());
    out.v = -w;
    out.norm_sum = wn;
    out.sharpness = 1.0;
    out.certified = true;
    return out;
  }

  // Eliminate v = u - w; constraints stack the cone and its translate.
  Eigen::MatrixXd G(2 * B.rows(), B.cols());
  G.topRows(B.rows()) = B;
  G.bottomRows(B.rows()) = B;
  Eigen::VectorXd h(2 * B.rows());
  h.head(B.rows()).setZero();
  h.tail(B.rows()) = B * w;

  Eigen::VectorXd u0;
  try {
    u0 = project_polyhedron(w, G, h);
  } catch (const std::runtime_error&) {
    // Full-dimensional realizable cones always admit a decomposition; an
    // empty projection means the pattern was degenerate.
    out.u = Eigen::VectorXd::Zero(ds.d());
    out.v = -w;
    out.norm_sum = wn;
    out.sharpness = 1.0;
    out.certified = false;
    return out;
  }

  const int per_stage = std::max(50, cfg.max_iters / 40);
  const double stage_exit = std::max(0.05 * cfg.tol_kkt, 1e-10);
  double res = 0.0;
  const Eigen::VectorXd u = smoothed_min(G, h, w, u0, per_stage, stage_exit, &res);

  out.u = u;
  out.v = u - w;
  out.norm_sum = out.u.norm() + out.v.norm();
  out.sharpness = out.norm_sum / wn;
  out.certified = res <= std::max(cfg.tol_kkt, 1e-7);
  return out;
}

ChebyshevResult chebyshev_feasibility(const Dataset& ds, const Pattern& D,
                                      const Eigen::VectorXd& z, double eps) {
  if (z.size() != ds.d()) throw std::invalid_argument("chebyshev_feasibility: dimension mismatch");
  if (std::abs(z.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("chebyshev_feasibility: z must be a unit vector");
  if (eps < 0.0) throw std::invalid_argument("chebyshev_feasibility: eps must be nonnegative");

  const Eigen::MatrixXd B = D.signed_rows(ds.X);
  const Eigen::VectorXd h = eps * (B * z).cwiseAbs();
  ChebyshevResult out;
  const LdpResult sol = ldp(B, h);
  if (!sol.feasible || sol.x.norm() > 1.0 + 1e-12) {
    out.feasible = false;
    return out;
  }
  out.feasible = true;
  out.u = sol.x;
  return out;
}

SharpnessReport cone_sharpness(const Dataset& ds, const Pattern& D, const Eigen::VectorXd& z,
                               const SolverConfig& cfg) {
  SharpnessReport rep;
  const Decomposition dec = decompose_min_norm(ds, D, z, cfg);
  rep.value = dec.norm_sum / z.norm();
  rep.certified = dec.certified;

  // 20-point logarithmic grid on [1e-4, 1]; feasibility is monotone in eps,
  // so the largest feasible grid point bounds the sharpness by 1 + 1/eps.
  rep.eps_star = 0.0;
  rep.upper_bound = std::numeric_limits<double>::infinity();
  const int grid = 20;
  for (int k = grid - 1; k >= 0; --k) {
    const double eps = std::pow(10.0, -4.0 + 4.0 * static_cast<double>(k) / (grid - 1));
    if (chebyshev_feasibility(ds, D, z / z.norm(), eps).feasible) {
      rep.eps_star = eps;
      rep.upper_bound = 1.0 + 1.0 / eps;
      break;
    }
  }
  return rep;
}

LambdaCheck lambda_construction_check(int d, const Eigen::VectorXd& b, double c,
                                      std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("lambda_construction_check: d must be >= 1");
  if (b.size() != d) throw std::invalid_argument("lambda_construction_check: b must have length d");
  const double n = c * d;
  if (b.norm() > 2.0 * std::sqrt(n) + 1e-9)
    throw std::invalid_argument("lambda_construction_check: ||b|| must be <= 2 sqrt(n)");

  Rng rng(seed);
  const Eigen::MatrixXd X = rng.normal_matrix(d, d);
  LambdaCheck out;
  out.bound = 5.0 * c;
  const LdpResult sol = ldp(X, b);
  if (!sol.feasible) {
    out.feasible = false;
    return out;
  }
  out.feasible = true;
  out.lambda = sol.x;
  out.norm = sol.x.norm();
  out.within_bound = out.norm <= out.bound;
  return out;
}

}  // namespace relucvx
