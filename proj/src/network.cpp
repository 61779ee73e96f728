#include "relucvx/network.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "relucvx/rng.hpp"

namespace relucvx {

namespace {

// Forward pass kept around so the gradient at an accepted backtracking point
// does not redo it.
struct Forward {
  Eigen::MatrixXd Z;    // n x m pre-activations
  Eigen::MatrixXd act;  // (Z)_+
  Eigen::VectorXd r;    // residual
  double loss = 0.0;
};

Forward forward_pass(const Dataset& ds, const NetworkParams& p) {
  Forward f;
  f.Z.noalias() = ds.X * p.U;
  f.act = f.Z.cwiseMax(0.0);
  f.r.noalias() = f.act * p.alpha;
  f.r -= ds.y;
  f.loss = 0.5 * f.r.squaredNorm() +
           0.5 * ds.beta * (p.U.squaredNorm() + p.alpha.squaredNorm());
  return f;
}

struct Grad {
  Eigen::MatrixXd gU;
  Eigen::VectorXd galpha;
};

// Subgradient: derivative of (z)_+ taken as 0 at z = 0.
Grad gradient_at(const Dataset& ds, const NetworkParams& p, const Forward& f) {
  Grad g;
  const Eigen::MatrixXd R =
      (f.Z.array() > 0.0).select(f.r * p.alpha.transpose(), 0.0);
  g.gU.noalias() = ds.X.transpose() * R;
  g.gU += ds.beta * p.U;
  g.galpha.noalias() = f.act.transpose() * f.r;
  g.galpha += ds.beta * p.alpha;
  return g;
}

MaskMatrix activation_masks(const Dataset& ds, const NetworkParams& p) {
  const Eigen::MatrixXd Z = ds.X * p.U;
  MaskMatrix m(Z.rows(), Z.cols());
  for (Eigen::Index j = 0; j < Z.cols(); ++j)
    for (Eigen::Index i = 0; i < Z.rows(); ++i) m(i, j) = Z(i, j) >= 0.0 ? 1 : 0;
  return m;
}

}  // namespace

NetworkParams init_network(int m, int d, std::uint64_t seed) {
  if (m < 1 || d < 1) throw std::invalid_argument("init_network: m and d must be >= 1");
  Rng rng(seed);
  const double sd = 1.0 / std::sqrt(static_cast<double>(m));
  NetworkParams p;
  p.U = sd * rng.normal_matrix(d, m);
  p.alpha = sd * rng.normal_vector(m);
  return p;
}

double network_loss(const Dataset& ds, const NetworkParams& p) {
  if (p.U.rows() != ds.d() || p.alpha.size() != p.U.cols())
    throw std::invalid_argument("network_loss: dimension mismatch");
  const Eigen::VectorXd r = (ds.X * p.U).cwiseMax(0.0) * p.alpha - ds.y;
  return 0.5 * r.squaredNorm() +
         0.5 * ds.beta * (p.U.squaredNorm() + p.alpha.squaredNorm());
}

TrainResult train_gd(const Dataset& ds, const NetworkParams& p0, const TrainOptions& opt) {
  if (opt.steps < 1) throw std::invalid_argument("train_gd: steps must be >= 1");
  TrainResult res;
  res.params = p0;
  NetworkParams& p = res.params;

  Forward fwd = forward_pass(ds, p);
  Grad g = gradient_at(ds, p, fwd);
  const double initial_loss = fwd.loss;
  res.trace.losses.push_back(fwd.loss);
  res.trace.snapshot_steps.push_back(0);
  res.trace.pattern_snapshots.push_back(activation_masks(ds, p));

  double step = opt.lr.value_or(1.0);
  const double mn = static_cast<double>(p.width() * ds.n());

  // Monotone-progress stall window: subgradient descent can terminate at a
  // kink (a neuron pinned on its activation boundary) where the loss is
  // stationary but the raw subgradient norm is not small, so gradient-norm
  // convergence alone would never fire there.
  constexpr int kStallWindow = 200;
  constexpr double kStallTol = 1e-9;

  int s = 0;
  for (; s < opt.steps; ++s) {
    const double g2 = g.gU.squaredNorm() + g.galpha.squaredNorm();
    res.grad_norm = std::sqrt(g2);
    if (res.grad_norm <= 1e-6 * (1.0 + fwd.loss)) {
      res.status = TrainStatus::converged;
      break;
    }
    if (!opt.lr && s >= kStallWindow) {
      const double before =
          res.trace.losses[res.trace.losses.size() - 1 - static_cast<std::size_t>(kStallWindow)];
      if (before - fwd.loss <= kStallTol * (1.0 + std::abs(fwd.loss))) {
        res.status = TrainStatus::converged;
        break;
      }
    }

    NetworkParams next;
    Forward fwd_next;
    if (opt.lr) {
      next.U = p.U - step * g.gU;
      next.alpha = p.alpha - step * g.galpha;
      fwd_next = forward_pass(ds, next);
    } else {
      // Armijo backtracking. The step regrows only after a first-try
      // acceptance; constant regrowth keeps the iterate hopping across
      // activation boundaries and stalls the gradient norm.
      bool first_try = true;
      while (true) {
        next.U = p.U - step * g.gU;
        next.alpha = p.alpha - step * g.galpha;
        fwd_next = forward_pass(ds, next);
        if (fwd_next.loss <= fwd.loss - 1e-4 * step * g2 || step < 1e-18) break;
        step *= 0.5;
        first_try = false;
      }
      if (first_try) step = std::min(step * 2.0, 1e6);
    }

    p = std::move(next);
    fwd = std::move(fwd_next);
    g = gradient_at(ds, p, fwd);
    res.trace.losses.push_back(fwd.loss);
    if (fwd.loss > 1e6 * std::max(initial_loss, 1e-12)) {
      res.status = TrainStatus::diverged;
      res.trace.snapshot_steps.push_back(s + 1);
      res.trace.pattern_snapshots.push_back(activation_masks(ds, p));
      break;
    }
    if (opt.snapshot_every > 0 && ((s + 1) % opt.snapshot_every) == 0) {
      res.trace.snapshot_steps.push_back(s + 1);
      res.trace.pattern_snapshots.push_back(activation_masks(ds, p));
    }
  }
  res.grad_norm = std::sqrt(g.gU.squaredNorm() + g.galpha.squaredNorm());
  if (res.status == TrainStatus::max_steps &&
      res.grad_norm <= 1e-6 * (1.0 + fwd.loss))
    res.status = TrainStatus::converged;
  if (res.status == TrainStatus::max_steps || res.status == TrainStatus::converged) {
    const int last = res.trace.losses.empty() ? 0 : static_cast<int>(res.trace.losses.size()) - 1;
    if (res.trace.pattern_snapshots.size() < 2 || res.trace.snapshot_steps.back() != last) {
      res.trace.snapshot_steps.push_back(last);
      res.trace.pattern_snapshots.push_back(activation_masks(ds, p));
    }
  }

  if (res.trace.pattern_snapshots.size() >= 2) {
    const MaskMatrix& a = res.trace.pattern_snapshots.front();
    const MaskMatrix& b = res.trace.pattern_snapshots.back();
    long changed = 0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        if (a(i, j) != b(i, j)) ++changed;
    res.trace.drift_fraction = static_cast<double>(changed) / mn;
  }
  return res;
}

double pattern_drift(const TrainTrace& trace) {
  if (trace.pattern_snapshots.size() < 2)
    throw std::invalid_argument("pattern_drift: need at least two snapshots");
  const MaskMatrix& a = trace.pattern_snapshots.front();
  const MaskMatrix& b = trace.pattern_snapshots.back();
  long changed = 0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (a(i, j) != b(i, j)) ++changed;
  return static_cast<double>(changed) / static_cast<double>(a.rows() * a.cols());
}

NetworkParams convex_to_network(const ConeSolution& sol, const PatternSet& ps) {
  if (static_cast<Eigen::Index>(sol.pairs.size()) != ps.size())
    throw std::invalid_argument("convex_to_network: block count mismatch");
  if (sol.cone_violation > 1e-8 * std::max(sol.cone_scale, 1e-300))
    throw std::domain_error(
        "convex_to_network: cone violation too large, the loss identity would not hold");

  const double zero_tol = 0.0;  // prox and projection produce exact zero blocks
  std::vector<Eigen::VectorXd> cols;
  std::vector<double> alphas;
  for (const auto& [u, v] : sol.pairs) {
    const double nu = u.norm();
    if (nu > zero_tol) {
      cols.push_back(u / std::sqrt(nu));
      alphas.push_back(std::sqrt(nu));
    }
    const double nv = v.norm();
    if (nv > zero_tol) {
      cols.push_back(v / std::sqrt(nv));
      alphas.push_back(-std::sqrt(nv));
    }
  }
  NetworkParams p;
  const auto m = static_cast<Eigen::Index>(cols.size());
  const auto d = sol.pairs.empty() ? Eigen::Index(0) : sol.pairs.front().first.size();
  p.U.resize(d, m);
  p.alpha.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    p.U.col(j) = cols[static_cast<std::size_t>(j)];
    p.alpha(j) = alphas[static_cast<std::size_t>(j)];
  }
  return p;
}

PatternSet network_to_convex_patterns(const NetworkParams& p, const Dataset& ds) {
  PatternSet ps;
  ps.provenance = Provenance::explicit_set;
  for (Eigen::Index j = 0; j < p.width(); ++j) {
    Pattern pat = pattern_of(ds.X, p.U.col(j));
    if (!ps.contains(pat)) ps.patterns.push_back(std::move(pat));
  }
  return ps;
}

long width_floor(double c, int n, double delta) {
  const double s = std::sqrt(c) + 1.0;
  return static_cast<long>(std::ceil(320.0 * s * s * std::log(static_cast<double>(n) / delta)));
}

}  // namespace relucvx
