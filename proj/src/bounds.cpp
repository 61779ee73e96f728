#include "relucvx/bounds.hpp"

#include <cmath>
#include <stdexcept>

#include "relucvx/rng.hpp"

namespace relucvx {

namespace {

double clamped_arccos_factor(double dot, double ni, double nj) {
  double rho = dot / (ni * nj);
  rho = std::min(1.0, std::max(-1.0, rho));
  return 0.5 - std::acos(rho) / (2.0 * M_PI);
}

Eigen::VectorXd energies(const Dataset& ds, const PatternSet& ps) {
  Eigen::VectorXd e(ps.size());
  for (Eigen::Index i = 0; i < ps.size(); ++i) {
    const Pattern& p = ps.patterns[static_cast<std::size_t>(i)];
    Eigen::VectorXd my(ds.n());
    for (Eigen::Index r = 0; r < ds.n(); ++r) my(r) = p.active(r) ? ds.y(r) : 0.0;
    e(i) = (ds.X.transpose() * my).squaredNorm();  // y^T D X X^T D y
  }
  return e;
}

}  // namespace

double lambda_min_sym(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((A + A.transpose()) / 2.0,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double lambda_max_sym(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((A + A.transpose()) / 2.0,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Eigen::MatrixXd expected_gram(const Dataset& ds) {
  const auto n = ds.n();
  Eigen::VectorXd norms(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    norms(i) = ds.X.row(i).norm();
    if (norms(i) == 0.0) throw std::invalid_argument("expected_gram: zero row in X");
  }
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    M(i, i) = 0.5 * norms(i) * norms(i);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dot = ds.X.row(i).dot(ds.X.row(j));
      const double v = clamped_arccos_factor(dot, norms(i), norms(j)) * dot;
      M(i, j) = v;
      M(j, i) = v;
    }
  }
  return M;
}

Eigen::MatrixXd sampled_gram(const Dataset& ds, const PatternSet& ps) {
  if (ps.size() == 0) throw std::invalid_argument("sampled_gram: empty pattern set");
  const auto n = ds.n();
  const Eigen::MatrixXd gram = ds.X * ds.X.transpose();
  Eigen::MatrixXd occ = Eigen::MatrixXd::Zero(n, n);
  for (const Pattern& p : ps.patterns) {
    const Eigen::VectorXd m = p.indicator();
    occ.noalias() += m * m.transpose();
  }
  return occ.cwiseProduct(gram) / static_cast<double>(ps.size());
}

Eigen::MatrixXd sampled_gram_draws(const Dataset& ds, long count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sampled_gram_draws: count must be >= 1");
  const auto n = ds.n();
  const Eigen::MatrixXd gram = ds.X * ds.X.transpose();
  Eigen::MatrixXd occ = Eigen::MatrixXd::Zero(n, n);
  Rng rng(seed);
  Eigen::VectorXd m(n);
  for (long k = 0; k < count; ++k) {
    const Eigen::VectorXd z = ds.X * rng.normal_vector(ds.d());
    for (Eigen::Index i = 0; i < n; ++i) m(i) = z(i) >= 0.0 ? 1.0 : 0.0;
    occ.noalias() += m * m.transpose();
  }
  return occ.cwiseProduct(gram) / static_cast<double>(count);
}

GramSummary gram_summary(const Dataset& ds, const PatternSet& ps) {
  GramSummary s;
  s.M = expected_gram(ds);
  s.M_sampled = sampled_gram(ds, ps);
  s.lambda_min_M = lambda_min_sym(s.M);
  s.lambda_max_gram = lambda_max_sym(ds.X * ds.X.transpose());
  if (s.lambda_min_M > 1e-10 * lambda_max_sym(s.M))
    s.kappa = s.lambda_max_gram / s.lambda_min_M;
  const Eigen::VectorXd e = energies(ds, ps);
  s.per_pattern_energies.assign(e.data(), e.data() + e.size());
  return s;
}

std::optional<double> compute_kappa(const Dataset& ds) {
  const Eigen::MatrixXd M = expected_gram(ds);
  const double lmin = lambda_min_sym(M);
  const double lmax_M = lambda_max_sym(M);
  if (lmin <= 1e-10 * lmax_M) return std::nullopt;
  return lambda_max_sym(ds.X * ds.X.transpose()) / lmin;
}

std::optional<double> bound_upper_gated(const Dataset& ds) {
  const Eigen::MatrixXd M = expected_gram(ds);
  const double lmin = lambda_min_sym(M);
  if (lmin <= 1e-10 * lambda_max_sym(M)) return std::nullopt;
  return std::sqrt(2.0) * ds.beta * ds.y.norm() / std::sqrt(lmin);
}

LowerBound bound_lower_full(const Dataset& ds, const PatternSet& ps_for_max) {
  if (ps_for_max.size() == 0) throw std::invalid_argument("bound_lower_full: empty pattern set");
  LowerBound out;
  const double max_energy = energies(ds, ps_for_max).maxCoeff();
  out.exact = ps_for_max.provenance == Provenance::enumerated;
  if (max_energy <= 0.0) {
    // y orthogonal to every masked row span; the dual scaling degenerates.
    out.G = ds.beta > 0.0 ? -std::numeric_limits<double>::infinity() : 1.0;
    out.value = 0.0;
    return out;
  }
  out.G = 1.0 - ds.beta / (2.0 * std::sqrt(max_energy));
  out.value = out.G * ds.beta * ds.y.norm() / std::sqrt(lambda_max_sym(ds.X * ds.X.transpose()));
  return out;
}

std::optional<double> bound_tighter_factor(const Dataset& ds, const PatternSet& ps) {
  if (ps.size() == 0) throw std::invalid_argument("bound_tighter_factor: empty pattern set");
  const double yn2 = ds.y.squaredNorm();
  if (yn2 == 0.0) return std::nullopt;
  const Eigen::MatrixXd Mp = sampled_gram(ds, ps);
  const double lmin = lambda_min_sym(Mp);
  if (lmin <= 1e-12 * std::max(lambda_max_sym(Mp), 1e-300)) return std::nullopt;
  const double quad_inv = ds.y.dot(Mp.ldlt().solve(ds.y));
  const double max_energy = energies(ds, ps).maxCoeff();
  const LowerBound lb = bound_lower_full(ds, ps);
  if (lb.G <= 0.0) return std::nullopt;
  return (std::sqrt(2.0) / lb.G) * std::sqrt(max_energy) * std::sqrt(quad_inv) / yn2;
}

double bound_maxcut(const Dataset& ds) {
  const auto n = ds.n();
  if (n > 20) throw std::invalid_argument("bound_maxcut: exhaustive enumeration limited to n <= 20");
  const Eigen::MatrixXd Q =
      ds.y.asDiagonal() * (ds.X * ds.X.transpose()) * ds.y.asDiagonal();

  // Gray-code walk over all binary vectors, rank-one updates of b^T Q b.
  Eigen::VectorXd qb = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  double val = 0.0;
  double best = 0.0;
  const std::uint64_t total = 1ULL << n;
  for (std::uint64_t k = 1; k < total; ++k) {
    const int j = __builtin_ctzll(k);  // bit flipped between gray(k-1) and gray(k)
    const double sgn = b(j) > 0.5 ? -1.0 : 1.0;
    val += 2.0 * sgn * qb(j) + Q(j, j);
    qb += sgn * Q.col(j);
    b(j) = b(j) > 0.5 ? 0.0 : 1.0;
    best = std::max(best, val);
  }
  return std::sqrt(std::max(0.0, best));
}

std::map<std::string, long> sample_thresholds(double kappa, int n, double delta,
                                              std::optional<double> c) {
  if (kappa <= 0.0) throw std::invalid_argument("sample_thresholds: kappa must be positive");
  if (delta <= 0.0 || delta >= 1.0)
    throw std::invalid_argument("sample_thresholds: delta must lie in (0, 1)");
  const double logn = std::log(static_cast<double>(n) / delta);
  const double log2n = std::log(2.0 * static_cast<double>(n) / delta);
  std::map<std::string, long> out;
  out["exact_fit"] = static_cast<long>(std::ceil(2.0 * kappa * logn));
  out["l2_concentration"] = static_cast<long>(std::ceil(12.0 * kappa * log2n));
  out["gated_upper"] = static_cast<long>(std::ceil(8.0 * kappa * logn));
  if (c) {
    const double s = std::sqrt(*c) + 1.0;
    out["width_floor"] = static_cast<long>(std::ceil(320.0 * s * s * logn));
  }
  return out;
}

}  // namespace relucvx
