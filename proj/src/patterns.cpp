#include "relucvx/patterns.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "relucvx/nnls.hpp"
#include "relucvx/rng.hpp"

namespace relucvx {

namespace {

constexpr double kRealizabilityEps = 1e-9;  // relative to row norms

struct MaskHash {
  std::size_t operator()(const std::vector<std::uint8_t>& m) const {
    std::size_t h = 1469598103934665603ULL;
    for (std::uint8_t b : m) {
      h ^= b;
      h *= 1099511628211ULL;
    }
    return h;
  }
};

// Strict feasibility of sigma_i (x_i^T u) > 0 for the first k rows, decided
// through the dual certificate: the open cone is empty exactly when zero is a
// convex combination of the signed (normalized) rows. The combination is
// found by one NNLS solve, which stays well scaled no matter how thin the
// cone is; kRealizabilityEps is the decision margin on the certificate
// residual.
bool signs_feasible(const Eigen::MatrixXd& X, const std::vector<int>& sigma) {
  const auto k = static_cast<Eigen::Index>(sigma.size());
  const auto d = X.cols();
  Eigen::MatrixXd C(d + 1, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    C.col(i).head(d) =
        (sigma[static_cast<std::size_t>(i)] / X.row(i).norm()) * X.row(i).transpose();
    C(d, i) = 1.0;
  }
  Eigen::VectorXd e = Eigen::VectorXd::Zero(d + 1);
  e(d) = 1.0;
  const NnlsResult r = nnls(C, e);
  return r.residual_norm > kRealizabilityEps;
}

void enumerate_rec(const Eigen::MatrixXd& X, std::vector<int>& sigma, std::vector<Pattern>& out) {
  const auto n = X.rows();
  if (static_cast<Eigen::Index>(sigma.size()) == n) {
    Pattern p;
    p.mask.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      p.mask[static_cast<std::size_t>(i)] = sigma[static_cast<std::size_t>(i)] > 0 ? 1 : 0;
    out.push_back(std::move(p));
    return;
  }
  for (int s : {+1, -1}) {
    sigma.push_back(s);
    if (signs_feasible(X, sigma)) enumerate_rec(X, sigma, out);
    sigma.pop_back();
  }
}

}  // namespace

Eigen::VectorXd Pattern::indicator() const {
  Eigen::VectorXd v(size());
  for (Eigen::Index i = 0; i < size(); ++i) v(i) = active(i) ? 1.0 : 0.0;
  return v;
}

Eigen::MatrixXd Pattern::signed_rows(const Eigen::MatrixXd& X) const {
  if (X.rows() != size()) throw std::invalid_argument("Pattern::signed_rows: size mismatch");
  Eigen::MatrixXd B(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) B.row(i) = (active(i) ? 1.0 : -1.0) * X.row(i);
  return B;
}

std::string Pattern::to_string() const {
  std::string s;
  s.reserve(mask.size());
  for (std::uint8_t b : mask) s.push_back(b ? '1' : '0');
  return s;
}

Pattern pattern_of(const Eigen::MatrixXd& X, const Eigen::VectorXd& g) {
  Pattern p;
  const Eigen::VectorXd z = X * g;
  p.mask.resize(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) p.mask[static_cast<std::size_t>(i)] = z(i) >= 0.0 ? 1 : 0;
  return p;
}

bool PatternSet::contains(const Pattern& p) const {
  return std::find(patterns.begin(), patterns.end(), p) != patterns.end();
}

PatternSet sample_patterns(const Dataset& ds, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_patterns: count must be >= 1");
  PatternSet ps;
  ps.provenance = Provenance::sampled;
  ps.seed = seed;
  ps.count_requested = count;

  Rng rng(seed);
  std::unordered_set<std::vector<std::uint8_t>, MaskHash> seen;
  const long budget = 50L * count;
  for (long draw = 0; draw < budget && static_cast<int>(ps.patterns.size()) < count; ++draw) {
    const Eigen::VectorXd g = rng.normal_vector(ds.d());
    Pattern p = pattern_of(ds.X, g);
    if (seen.insert(p.mask).second) ps.patterns.push_back(std::move(p));
  }
  return ps;
}

PatternSet enumerate_patterns(const Dataset& ds) {
  if (ds.n() > 20 || ds.d() > 6)
    throw std::invalid_argument("enumerate_patterns: exhaustive mode is limited to n <= 20, d <= 6");
  PatternSet ps;
  ps.provenance = Provenance::enumerated;
  std::vector<int> sigma;
  sigma.reserve(static_cast<std::size_t>(ds.n()));
  enumerate_rec(ds.X, sigma, ps.patterns);
  return ps;
}

std::vector<std::pair<Pattern, Pattern>> paired_pattern_list(const Dataset& ds) {
  const auto n = ds.n();
  const auto d = ds.d();
  const Eigen::MatrixXd& X = ds.X;

  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double cosij = std::abs(X.row(i).dot(X.row(j))) / (X.row(i).norm() * X.row(j).norm());
      if (cosij > 1.0 - 1e-12)
        throw std::invalid_argument("paired_pattern_list: rows " + std::to_string(i) + " and " +
                                    std::to_string(j) + " are parallel");
    }

  std::vector<std::pair<Pattern, Pattern>> pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  Rng probe(0x70a1c3d5b7e90213ULL);  // fixed stream: the construction takes no seed
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = X.row(i).transpose();
    const double xin2 = xi.squaredNorm();

    // c on hyperplane i, clear of every other hyperplane.
    Eigen::VectorXd c;
    bool found = false;
    for (int attempt = 0; attempt < 256 && !found; ++attempt) {
      Eigen::VectorXd v = probe.normal_vector(d);
      c = v - (xi.dot(v) / xin2) * xi;
      if (c.norm() == 0.0) continue;
      found = true;
      for (Eigen::Index j = 0; j < n && found; ++j) {
        if (j == i) continue;
        if (std::abs(c.dot(X.row(j).transpose())) <= 1e-9 * c.norm() * X.row(j).norm()) found = false;
      }
    }
    if (!found) throw std::runtime_error("paired_pattern_list: could not place a point on hyperplane");

    double eps = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dot_ij = std::abs(xi.dot(X.row(j).transpose()));
      if (dot_ij > 1e-12 * xi.norm() * X.row(j).norm())
        eps = std::min(eps, std::abs(c.dot(X.row(j).transpose())) / (2.0 * dot_ij));
    }
    if (!std::isfinite(eps)) eps = 1.0;  // every other row orthogonal to x_i

    Pattern plus = pattern_of(X, c + eps * xi);
    Pattern minus = pattern_of(X, c - eps * xi);
    pairs.emplace_back(std::move(plus), std::move(minus));
  }
  return pairs;
}

PatternSet paired_patterns(const Dataset& ds) {
  PatternSet ps;
  ps.provenance = Provenance::paired;
  std::unordered_set<std::vector<std::uint8_t>, MaskHash> seen;
  for (auto& [a, b] : paired_pattern_list(ds)) {
    if (seen.insert(a.mask).second) ps.patterns.push_back(a);
    if (seen.insert(b.mask).second) ps.patterns.push_back(b);
  }
  return ps;
}

bool is_realizable(const Dataset& ds, const Pattern& p) {
  if (p.size() != ds.n()) throw std::invalid_argument("is_realizable: size mismatch");
  std::vector<int> sigma(static_cast<std::size_t>(ds.n()));
  for (Eigen::Index i = 0; i < ds.n(); ++i) sigma[static_cast<std::size_t>(i)] = p.active(i) ? 1 : -1;
  return signs_feasible(ds.X, sigma);
}

}  // namespace relucvx
