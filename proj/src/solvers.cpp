#include "relucvx/solvers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "relucvx/nnls.hpp"

namespace relucvx {

namespace {

// sum_i D_i X X^T D_i = (sum_i m_i m_i^T) .* (X X^T)
Eigen::MatrixXd stacked_gram(const Dataset& ds, const PatternSet& ps) {
  const auto n = ds.n();
  Eigen::MatrixXd occ = Eigen::MatrixXd::Zero(n, n);
  for (const Pattern& p : ps.patterns) {
    const Eigen::VectorXd m = p.indicator();
    occ.noalias() += m * m.transpose();
  }
  return occ.cwiseProduct(ds.X * ds.X.transpose());
}

double lambda_max_sym(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((S + S.transpose()) / 2.0);
  return es.eigenvalues().maxCoeff();
}

Eigen::VectorXd masked(const Eigen::VectorXd& v, const Pattern& p) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = p.active(i) ? v(i) : 0.0;
  return out;
}

Eigen::VectorXd gated_residual(const Dataset& ds, const PatternSet& ps, const Blocks& w) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(ds.n());
  for (Eigen::Index i = 0; i < ps.size(); ++i)
    acc += masked(ds.X * w[static_cast<std::size_t>(i)], ps.patterns[static_cast<std::size_t>(i)]);
  return acc - ds.y;
}

Eigen::VectorXd block_soft(const Eigen::VectorXd& z, double t) {
  const double nz = z.norm();
  if (nz <= t) return Eigen::VectorXd::Zero(z.size());
  return (1.0 - t / nz) * z;
}

// Worst-block optimality violation, relative to beta (or to the natural data
// scale when beta == 0, where the condition degenerates to the normal
// equations).
double gated_kkt(const Dataset& ds, const PatternSet& ps, const Blocks& w,
                 const Eigen::VectorXd& lambda, std::vector<double>* per_block = nullptr) {
  const double beta = ds.beta;
  double scale = beta;
  if (scale <= 0.0) {
    scale = 1.0;
    for (const Pattern& p : ps.patterns)
      scale = std::max(scale, (ds.X.transpose() * masked(ds.y, p)).norm());
  }
  double worst = 0.0;
  if (per_block) per_block->clear();
  for (Eigen::Index i = 0; i < ps.size(); ++i) {
    const Pattern& p = ps.patterns[static_cast<std::size_t>(i)];
    const Eigen::VectorXd s = ds.X.transpose() * masked(lambda, p);
    const Eigen::VectorXd& wi = w[static_cast<std::size_t>(i)];
    const double nw = wi.norm();
    double viol;
    if (nw > 0.0 && beta > 0.0) {
      viol = (s - beta * wi / nw).norm();
    } else {
      viol = std::max(0.0, s.norm() - beta);
    }
    viol /= scale;
    worst = std::max(worst, viol);
    if (per_block) per_block->push_back(viol);
  }
  return worst;
}

// Distance from `target` to beta * subdifferential(||u||) + normal cone of
// {B u >= 0} at u, via one small NNLS solve on the active rows. Zero exactly
// at a KKT point of the cone-constrained problem.
double block_stationarity_gap(const Eigen::VectorXd& target, const Eigen::VectorXd& u,
                              const Eigen::MatrixXd& B, double beta) {
  const double un = u.norm();
  std::vector<Eigen::Index> active;
  if (un == 0.0) {
    for (Eigen::Index i = 0; i < B.rows(); ++i) active.push_back(i);
  } else {
    const Eigen::VectorXd slack = B * u;
    for (Eigen::Index i = 0; i < B.rows(); ++i)
      if (slack(i) <= 1e-7 * (1.0 + un) * B.row(i).norm()) active.push_back(i);
  }
  Eigen::MatrixXd C(B.cols(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k)
    C.col(static_cast<Eigen::Index>(k)) = B.row(active[k]).transpose();
  if (un == 0.0) {
    // target must lie within the beta-ball plus the normal cone.
    const Eigen::VectorXd e = -target;
    const double dist_cone = active.empty() ? target.norm() : nnls(C, e).residual_norm;
    return std::max(0.0, dist_cone - beta);
  }
  const Eigen::VectorXd e = -(target - beta * u / un);
  return active.empty() ? e.norm() : nnls(C, e).residual_norm;
}

// Worst block violation of the cone-problem KKT system at feasible pairs,
// relative to beta.
double cone_kkt(const Dataset& ds, const PatternSet& ps,
                const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs,
                const std::vector<Eigen::MatrixXd>& cones) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(ds.n());
  for (Eigen::Index i = 0; i < ps.size(); ++i) {
    const auto& [u, v] = pairs[static_cast<std::size_t>(i)];
    acc += masked(ds.X * (u - v), ps.patterns[static_cast<std::size_t>(i)]);
  }
  const Eigen::VectorXd r = acc - ds.y;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < ps.size(); ++i) {
    const Eigen::VectorXd g =
        ds.X.transpose() * masked(r, ps.patterns[static_cast<std::size_t>(i)]);
    const auto& B = cones[static_cast<std::size_t>(i)];
    const auto& [u, v] = pairs[static_cast<std::size_t>(i)];
    worst = std::max(worst, block_stationarity_gap(-g, u, B, ds.beta));
    worst = std::max(worst, block_stationarity_gap(g, v, B, ds.beta));
  }
  return worst / ds.beta;
}

}  // namespace

double gated_objective(const Dataset& ds, const PatternSet& ps, const Blocks& w) {
  if (static_cast<Eigen::Index>(w.size()) != ps.size())
    throw std::invalid_argument("gated_objective: block count mismatch");
  double reg = 0.0;
  for (const auto& wi : w) reg += wi.norm();
  return 0.5 * gated_residual(ds, ps, w).squaredNorm() + ds.beta * reg;
}

double cone_objective(const Dataset& ds, const PatternSet& ps,
                      const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs) {
  if (static_cast<Eigen::Index>(pairs.size()) != ps.size())
    throw std::invalid_argument("cone_objective: block count mismatch");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(ds.n());
  double reg = 0.0;
  for (Eigen::Index i = 0; i < ps.size(); ++i) {
    const auto& [u, v] = pairs[static_cast<std::size_t>(i)];
    acc += masked(ds.X * (u - v), ps.patterns[static_cast<std::size_t>(i)]);
    reg += u.norm() + v.norm();
  }
  return 0.5 * (acc - ds.y).squaredNorm() + ds.beta * reg;
}

GatedSolution solve_gated(const Dataset& ds, const PatternSet& ps, const SolverConfig& cfg,
                          const Blocks* warm_start) {
  if (ps.size() == 0) throw std::invalid_argument("solve_gated: empty pattern set");
  const auto P = ps.size();
  const auto d = ds.d();
  const double beta = ds.beta;

  if (beta == 0.0) {
    // No shrinkage: the problem is the least-norm fit.
    FitResult fit = exact_fit(ds, ps);
    GatedSolution sol;
    sol.weights = std::move(fit.weights);
    sol.dual_vector = -gated_residual(ds, ps, sol.weights);
    sol.objective = gated_objective(ds, ps, sol.weights);
    sol.kkt_residual = gated_kkt(ds, ps, sol.weights, sol.dual_vector);
    sol.iterations = 0;
    sol.certified = sol.kkt_residual <= cfg.tol_kkt;
    return sol;
  }

  double L = 0.0;
  if (cfg.step_rule == StepRule::fixed) {
    L = lambda_max_sym(stacked_gram(ds, ps));
    if (L <= 0.0) L = 1.0;
  } else {
    L = std::max(1e-12, (ds.X * ds.X.transpose()).trace() / static_cast<double>(ds.n()));
  }

  Blocks x(static_cast<std::size_t>(P), Eigen::VectorXd::Zero(d));
  if (warm_start) {
    if (static_cast<Eigen::Index>(warm_start->size()) != P)
      throw std::invalid_argument("solve_gated: warm start block count mismatch");
    x = *warm_start;
  }
  Blocks yv = x;
  Blocks x_prev = x;
  double t = 1.0;

  double best_obj = gated_objective(ds, ps, x);
  Blocks best_x = x;

  GatedSolution sol;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    Eigen::VectorXd r = gated_residual(ds, ps, yv);
    const double f_y = 0.5 * r.squaredNorm();

    Blocks grad(static_cast<std::size_t>(P));
    for (Eigen::Index i = 0; i < P; ++i)
      grad[static_cast<std::size_t>(i)] =
          ds.X.transpose() * masked(r, ps.patterns[static_cast<std::size_t>(i)]);

    Blocks x_new(static_cast<std::size_t>(P));
    while (true) {
      const double step = 1.0 / L;
      for (Eigen::Index i = 0; i < P; ++i)
        x_new[static_cast<std::size_t>(i)] = block_soft(
            yv[static_cast<std::size_t>(i)] - step * grad[static_cast<std::size_t>(i)], beta * step);
      if (cfg.step_rule == StepRule::fixed) break;
      // Backtracking: enforce the quadratic upper model at the new point.
      double quad = f_y;
      double dist2 = 0.0;
      for (Eigen::Index i = 0; i < P; ++i) {
        const Eigen::VectorXd diff =
            x_new[static_cast<std::size_t>(i)] - yv[static_cast<std::size_t>(i)];
        quad += grad[static_cast<std::size_t>(i)].dot(diff);
        dist2 += diff.squaredNorm();
      }
      quad += 0.5 * L * dist2;
      const double f_new = 0.5 * gated_residual(ds, ps, x_new).squaredNorm();
      if (f_new <= quad + 1e-14 * std::max(1.0, std::abs(quad))) break;
      L *= 2.0;
    }

    const double obj_new = gated_objective(ds, ps, x_new);
    if (obj_new <= best_obj) {  // non-strict: at the float floor keep tracking
      best_obj = obj_new;       // the converging iterate so its KKT certifies
      best_x = x_new;
    }

    // Gradient restart.
    double restart_dot = 0.0;
    double move2 = 0.0;
    for (Eigen::Index i = 0; i < P; ++i) {
      const Eigen::VectorXd diff =
          x_new[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)];
      restart_dot +=
          (yv[static_cast<std::size_t>(i)] - x_new[static_cast<std::size_t>(i)]).dot(diff);
      move2 += diff.squaredNorm();
    }
    if (restart_dot > 0.0) {
      t = 1.0;
      yv = x_new;
    } else {
      const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      for (Eigen::Index i = 0; i < P; ++i)
        yv[static_cast<std::size_t>(i)] =
            x_new[static_cast<std::size_t>(i)] +
            ((t - 1.0) / t_new) *
                (x_new[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)]);
      t = t_new;
    }
    x_prev = std::move(x);
    x = x_new;

    if ((it % 16) == 15 || move2 == 0.0) {
      const Eigen::VectorXd lam = -gated_residual(ds, ps, best_x);
      if (gated_kkt(ds, ps, best_x, lam) <= cfg.tol_kkt) {
        ++it;
        break;
      }
      if (move2 == 0.0) break;
    }
  }

  sol.weights = std::move(best_x);
  sol.dual_vector = -gated_residual(ds, ps, sol.weights);
  sol.objective = gated_objective(ds, ps, sol.weights);
  sol.kkt_residual = gated_kkt(ds, ps, sol.weights, sol.dual_vector);
  sol.iterations = it;
  sol.certified = sol.kkt_residual <= cfg.tol_kkt;
  return sol;
}

L2Solution solve_gated_l2(const Dataset& ds, const PatternSet& ps) {
  if (ps.size() == 0) throw std::invalid_argument("solve_gated_l2: empty pattern set");
  const auto n = ds.n();
  const double beta = ds.beta;
  const Eigen::MatrixXd S = stacked_gram(ds, ps);

  L2Solution out;
  if (beta == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((S + S.transpose()) / 2.0);
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin <= 1e-12 * std::max(lmax, 1e-300))
      throw std::runtime_error("solve_gated_l2: beta = 0 with singular stacked Gram");
    const Eigen::VectorXd mu = es.eigenvectors() *
                               (es.eigenvalues().cwiseInverse().asDiagonal() *
                                (es.eigenvectors().transpose() * ds.y));
    out.value = 0.0;
    out.dual = Eigen::VectorXd::Zero(n);
    out.weights.reserve(static_cast<std::size_t>(ps.size()));
    for (const Pattern& p : ps.patterns)
      out.weights.push_back(ds.X.transpose() * masked(mu, p));
    return out;
  }

  const Eigen::MatrixXd A = beta * Eigen::MatrixXd::Identity(n, n) + S;
  const Eigen::VectorXd lambda = beta * A.ldlt().solve(ds.y);
  out.dual = lambda;
  out.value = 0.5 * ds.y.dot(lambda);
  out.weights.reserve(static_cast<std::size_t>(ps.size()));
  for (const Pattern& p : ps.patterns)
    out.weights.push_back(ds.X.transpose() * masked(lambda, p) / beta);
  return out;
}

FitResult exact_fit(const Dataset& ds, const PatternSet& ps) {
  const auto n = ds.n();
  const auto d = ds.d();
  const auto P = ps.size();
  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(n, P * d);
  for (Eigen::Index i = 0; i < P; ++i) {
    const Pattern& p = ps.patterns[static_cast<std::size_t>(i)];
    for (Eigen::Index row = 0; row < n; ++row)
      if (p.active(row)) stacked.row(row).segment(i * d, d) = ds.X.row(row);
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(stacked);
  const Eigen::VectorXd w = cod.solve(ds.y);
  FitResult out;
  out.weights.reserve(static_cast<std::size_t>(P));
  for (Eigen::Index i = 0; i < P; ++i) out.weights.push_back(w.segment(i * d, d));
  out.residual = (stacked * w - ds.y).norm();
  out.fit = out.residual <= 1e-8 * ds.y.norm() + 1e-300;
  return out;
}

ConeSolution solve_cone_constrained(const Dataset& ds, const PatternSet& ps,
                                    const SolverConfig& cfg, const ConeSolution* warm_start) {
  if (ps.size() == 0) throw std::invalid_argument("solve_cone_constrained: empty pattern set");
  if (ds.beta <= 0.0) throw std::invalid_argument("solve_cone_constrained: beta must be positive");
  const auto P = ps.size();
  const auto d = ds.d();
  const double beta = ds.beta;

  std::vector<Eigen::MatrixXd> cones;
  cones.reserve(static_cast<std::size_t>(P));
  for (const Pattern& p : ps.patterns) cones.push_back(p.signed_rows(ds.X));

  const double L = 2.0 * std::max(lambda_max_sym(stacked_gram(ds, ps)), 1e-12);
  const double step = 1.0 / L;

  // Because K is a cone and the group norm is radial, the prox of
  // beta||.|| + indicator(K) is exactly block_soft(project_K(.)): one
  // projection then one shrinkage per block per iteration.
  const auto prox = [&](const Eigen::VectorXd& zv, Eigen::Index block) {
    return block_soft(project_cone(zv, cones[static_cast<std::size_t>(block / 2)]), step * beta);
  };

  // 2P blocks, u_i at 2i, v_i at 2i+1.
  Blocks x(static_cast<std::size_t>(2 * P), Eigen::VectorXd::Zero(d));
  if (warm_start) {
    if (static_cast<Eigen::Index>(warm_start->pairs.size()) != P)
      throw std::invalid_argument("solve_cone_constrained: warm start block count mismatch");
    for (Eigen::Index i = 0; i < P; ++i) {
      x[static_cast<std::size_t>(2 * i)] = warm_start->pairs[static_cast<std::size_t>(i)].first;
      x[static_cast<std::size_t>(2 * i + 1)] = warm_start->pairs[static_cast<std::size_t>(i)].second;
    }
    for (Eigen::Index b = 0; b < 2 * P; ++b)
      x[static_cast<std::size_t>(b)] =
          project_cone(x[static_cast<std::size_t>(b)], cones[static_cast<std::size_t>(b / 2)]);
  }
  Blocks yv = x;

  auto eval_obj = [&](const Blocks& blocks) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(ds.n());
    double reg = 0.0;
    for (Eigen::Index i = 0; i < P; ++i) {
      const auto& u = blocks[static_cast<std::size_t>(2 * i)];
      const auto& v = blocks[static_cast<std::size_t>(2 * i + 1)];
      acc += masked(ds.X * (u - v), ps.patterns[static_cast<std::size_t>(i)]);
      reg += u.norm() + v.norm();
    }
    return 0.5 * (acc - ds.y).squaredNorm() + beta * reg;
  };

  double best_obj = eval_obj(x);
  Blocks best = x;
  double t = 1.0;

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(ds.n());
    for (Eigen::Index i = 0; i < P; ++i)
      acc += masked(ds.X * (yv[static_cast<std::size_t>(2 * i)] - yv[static_cast<std::size_t>(2 * i + 1)]),
                    ps.patterns[static_cast<std::size_t>(i)]);
    const Eigen::VectorXd r = acc - ds.y;

    Blocks x_new(static_cast<std::size_t>(2 * P));
    double move2 = 0.0;
    double restart_dot = 0.0;
    for (Eigen::Index i = 0; i < P; ++i) {
      const Eigen::VectorXd g = ds.X.transpose() * masked(r, ps.patterns[static_cast<std::size_t>(i)]);
      for (int side = 0; side < 2; ++side) {
        const auto b = static_cast<std::size_t>(2 * i + side);
        const Eigen::VectorXd grad = (side == 0) ? g : Eigen::VectorXd(-g);
        x_new[b] = prox(yv[b] - step * grad, 2 * i + side);
        const Eigen::VectorXd diff = x_new[b] - x[b];
        restart_dot += (yv[b] - x_new[b]).dot(diff);
        move2 += diff.squaredNorm();
      }
    }

    if (restart_dot > 0.0) {
      t = 1.0;
      for (Eigen::Index b = 0; b < 2 * P; ++b)
        yv[static_cast<std::size_t>(b)] = x_new[static_cast<std::size_t>(b)];
    } else {
      const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      for (Eigen::Index b = 0; b < 2 * P; ++b)
        yv[static_cast<std::size_t>(b)] =
            x_new[static_cast<std::size_t>(b)] +
            ((t - 1.0) / t_new) *
                (x_new[static_cast<std::size_t>(b)] - x[static_cast<std::size_t>(b)]);
      t = t_new;
    }
    x = std::move(x_new);

    const double obj = eval_obj(x);
    if (obj <= best_obj) {
      best_obj = obj;
      best = x;
    }

    const int check_every = P <= 32 ? 16 : 128;  // the check costs 2P NNLS solves
    if ((it % check_every) == check_every - 1 || move2 == 0.0) {
      std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> probe;
      probe.reserve(static_cast<std::size_t>(P));
      for (Eigen::Index i = 0; i < P; ++i)
        probe.emplace_back(best[static_cast<std::size_t>(2 * i)],
                           best[static_cast<std::size_t>(2 * i + 1)]);
      if (cone_kkt(ds, ps, probe, cones) <= cfg.tol_kkt) {
        ++it;
        break;
      }
      if (move2 == 0.0) break;
    }
  }

  ConeSolution sol;
  sol.pairs.reserve(static_cast<std::size_t>(P));
  for (Eigen::Index i = 0; i < P; ++i)
    sol.pairs.emplace_back(best[static_cast<std::size_t>(2 * i)],
                           best[static_cast<std::size_t>(2 * i + 1)]);
  sol.objective = cone_objective(ds, ps, sol.pairs);
  sol.kkt_residual = cone_kkt(ds, ps, sol.pairs, cones);
  sol.iterations = it;
  sol.certified = sol.kkt_residual <= cfg.tol_kkt;

  double viol = 0.0;
  double scale = 0.0;
  for (Eigen::Index i = 0; i < P; ++i) {
    const auto& [u, v] = sol.pairs[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd& B = cones[static_cast<std::size_t>(i)];
    viol = std::max(viol, std::max(0.0, -(B * u).minCoeff()));
    viol = std::max(viol, std::max(0.0, -(B * v).minCoeff()));
    scale = std::max(scale, (ds.X * u).cwiseAbs().maxCoeff());
  }
  sol.cone_violation = viol;
  sol.cone_scale = scale;
  return sol;
}

KktReport verify_kkt_gated(const Dataset& ds, const PatternSet& ps, const GatedSolution& sol) {
  if (static_cast<Eigen::Index>(sol.weights.size()) != ps.size())
    throw std::invalid_argument("verify_kkt_gated: block count mismatch");
  for (const auto& wi : sol.weights)
    if (wi.size() != ds.d()) throw std::invalid_argument("verify_kkt_gated: weight dimension mismatch");

  KktReport rep;
  const Eigen::VectorXd lambda = -gated_residual(ds, ps, sol.weights);
  rep.max_violation = gated_kkt(ds, ps, sol.weights, lambda, &rep.block_violations);

  // Feasible dual value: scale lambda into the dual ball, evaluate
  // -1/2||.||^2 + <.,y>.
  double worst = 0.0;
  for (const Pattern& p : ps.patterns)
    worst = std::max(worst, (ds.X.transpose() * masked(lambda, p)).norm());
  const double s = (ds.beta > 0.0 && worst > ds.beta) ? ds.beta / worst : 1.0;
  const Eigen::VectorXd lam_feas = s * lambda;
  const double dual_value = -0.5 * lam_feas.squaredNorm() + lam_feas.dot(ds.y);
  rep.dual_gap = gated_objective(ds, ps, sol.weights) - dual_value;
  return rep;
}

}  // namespace relucvx
