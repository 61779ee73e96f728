#include "relucvx/nnls.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace relucvx {

namespace {

// Unconstrained least squares restricted to the passive columns.
Eigen::VectorXd passive_ls(const Eigen::MatrixXd& C, const Eigen::VectorXd& e,
                           const std::vector<int>& passive) {
  Eigen::MatrixXd Cp(C.rows(), static_cast<Eigen::Index>(passive.size()));
  for (std::size_t k = 0; k < passive.size(); ++k) Cp.col(static_cast<Eigen::Index>(k)) = C.col(passive[k]);
  return Cp.colPivHouseholderQr().solve(e);
}

}  // namespace

NnlsResult nnls(const Eigen::MatrixXd& C, const Eigen::VectorXd& e, double tol, int max_outer) {
  const Eigen::Index m = C.rows();
  const Eigen::Index k = C.cols();
  if (e.size() != m) throw std::invalid_argument("nnls: size mismatch");

  const double scale = std::max(1e-300, C.cwiseAbs().maxCoeff() * std::max(1.0, e.cwiseAbs().maxCoeff()));
  if (tol <= 0.0) tol = 100.0 * std::numeric_limits<double>::epsilon() * scale;
  if (max_outer <= 0) max_outer = 3 * static_cast<int>(k) + 30;

  NnlsResult res;
  res.x = Eigen::VectorXd::Zero(k);
  std::vector<bool> in_passive(static_cast<std::size_t>(k), false);
  std::vector<int> passive;

  Eigen::VectorXd r = e;  // residual e - C x
  for (int outer = 0; outer < max_outer; ++outer) {
    Eigen::VectorXd w = C.transpose() * r;
    int t = -1;
    double wmax = tol;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!in_passive[static_cast<std::size_t>(j)] && w(j) > wmax) {
        wmax = w(j);
        t = static_cast<int>(j);
      }
    }
    if (t < 0) {
      res.converged = true;
      break;
    }
    in_passive[static_cast<std::size_t>(t)] = true;
    passive.push_back(t);

    // Inner loop: restore nonnegativity on the passive set.
    for (int inner = 0; inner < max_outer + static_cast<int>(k); ++inner) {
      Eigen::VectorXd z = passive_ls(C, e, passive);
      bool all_pos = true;
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        if (z(j) <= 0.0) {
          all_pos = false;
          break;
        }
      }
      if (all_pos) {
        res.x.setZero();
        for (std::size_t j = 0; j < passive.size(); ++j) res.x(passive[j]) = z(static_cast<Eigen::Index>(j));
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < passive.size(); ++j) {
        const double zj = z(static_cast<Eigen::Index>(j));
        if (zj <= 0.0) {
          const double xj = res.x(passive[j]);
          alpha = std::min(alpha, xj / (xj - zj));
        }
      }
      if (!std::isfinite(alpha)) alpha = 0.0;
      double xmax = 0.0;
      for (std::size_t j = 0; j < passive.size(); ++j) {
        res.x(passive[j]) += alpha * (z(static_cast<Eigen::Index>(j)) - res.x(passive[j]));
        xmax = std::max(xmax, res.x(passive[j]));
      }
      // Drop variables that hit the bound (the blocking variable lands at
      // zero up to roundoff).
      const double drop_tol = 1e-13 * std::max(1.0, xmax);
      std::vector<int> kept;
      for (int idx : passive) {
        if (res.x(idx) > drop_tol) {
          kept.push_back(idx);
        } else {
          in_passive[static_cast<std::size_t>(idx)] = false;
          res.x(idx) = 0.0;
        }
      }
      passive = std::move(kept);
      if (passive.empty()) break;
    }
    r = e - C * res.x;
    res.iterations = outer + 1;
  }
  res.residual_norm = (e - C * res.x).norm();
  return res;
}

LdpResult ldp(const Eigen::MatrixXd& G, const Eigen::VectorXd& h) {
  const Eigen::Index m = G.rows();
  const Eigen::Index d = G.cols();
  if (h.size() != m) throw std::invalid_argument("ldp: size mismatch");

  LdpResult out;
  if (m == 0 || (h.array() <= 0.0).all()) {
    // x = 0 already satisfies every constraint.
    out.feasible = true;
    out.x = Eigen::VectorXd::Zero(d);
    return out;
  }

  // Row scaling keeps the feasibility decision well conditioned.
  Eigen::MatrixXd Gs(m, d);
  Eigen::VectorXd hs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = std::max(G.row(i).norm(), std::abs(h(i)));
    const double inv = (s > 0.0) ? 1.0 / s : 1.0;
    Gs.row(i) = G.row(i) * inv;
    hs(i) = h(i) * inv;
  }

  Eigen::MatrixXd E(d + 1, m);
  E.topRows(d) = Gs.transpose();
  E.row(d) = hs.transpose();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(d + 1);
  f(d) = 1.0;

  const NnlsResult nn = nnls(E, f);
  Eigen::VectorXd r = E * nn.x - f;
  const double rn = r.norm();
  if (rn <= 1e-12 || r(d) >= -1e-12) {
    out.feasible = false;
    return out;
  }
  Eigen::VectorXd x = -r.head(d) / r(d);
  // The NNLS residual can stall above zero on infeasible systems with tiny
  // right-hand sides; trust the recovered point only if it actually
  // satisfies the (row-normalized) constraints.
  if (((Gs * x - hs).array() < -1e-7 * (1.0 + x.norm())).any()) {
    out.feasible = false;
    return out;
  }
  out.feasible = true;
  out.x = x;
  return out;
}

Eigen::VectorXd project_polyhedron(const Eigen::VectorXd& z, const Eigen::MatrixXd& G,
                                   const Eigen::VectorXd& h) {
  const LdpResult p = ldp(G, h - G * z);
  if (!p.feasible) throw std::runtime_error("project_polyhedron: empty polyhedron");
  return z + p.x;
}

namespace {

// Planar cones are angular sectors; the projection is z itself, the best
// projection onto a feasible boundary ray, or the origin.
Eigen::Vector2d project_sector_2d(const Eigen::Vector2d& z, const Eigen::MatrixXd& B) {
  const auto feasible = [&](const Eigen::Vector2d& u, double tol) {
    for (Eigen::Index i = 0; i < B.rows(); ++i)
      if (B(i, 0) * u(0) + B(i, 1) * u(1) < -tol) return false;
    return true;
  };
  if (feasible(z, 0.0)) return z;

  Eigen::Vector2d best = Eigen::Vector2d::Zero();
  double best_d2 = z.squaredNorm();
  for (Eigen::Index i = 0; i < B.rows(); ++i) {
    const Eigen::Vector2d bi(B(i, 0), B(i, 1));
    const double nb = bi.norm();
    if (nb == 0.0) continue;
    const Eigen::Vector2d t(-bi(1) / nb, bi(0) / nb);
    for (const Eigen::Vector2d& ray : {t, Eigen::Vector2d(-t)}) {
      if (!feasible(ray, 1e-12)) continue;
      const double c = std::max(0.0, z.dot(ray));
      const Eigen::Vector2d cand = c * ray;
      const double d2 = (z - cand).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = cand;
      }
    }
  }
  return best;
}

}  // namespace

Eigen::VectorXd project_cone(const Eigen::VectorXd& z, const Eigen::MatrixXd& B) {
  if (B.cols() == 2) return project_sector_2d(z, B);
  return project_polyhedron(z, B, Eigen::VectorXd::Zero(B.rows()));
}

}  // namespace relucvx
