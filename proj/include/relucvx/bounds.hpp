#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relucvx/core.hpp"
#include "relucvx/patterns.hpp"

namespace relucvx {

/// Expected activation Gram matrix M: entry (i, j) is the orthant
/// probability over a Gaussian gate times the inner product,
///   M_ij = (1/2 - arccos(<x_i,x_j>/(||x_i|| ||x_j||)) / (2 pi)) <x_i, x_j>.
/// Diagonal entries are exactly ||x_i||^2 / 2.
Eigen::MatrixXd expected_gram(const Dataset& ds);

/// Average of D_i X X^T D_i over the supplied (deduplicated) pattern set.
Eigen::MatrixXd sampled_gram(const Dataset& ds, const PatternSet& ps);

/// Same average over `count` raw i.i.d. Gaussian gate draws (duplicates kept),
/// for concentration experiments.
Eigen::MatrixXd sampled_gram_draws(const Dataset& ds, long count, std::uint64_t seed);

struct GramSummary {
  Eigen::MatrixXd M;
  Eigen::MatrixXd M_sampled;
  double lambda_min_M = 0.0;
  double lambda_max_gram = 0.0;
  std::optional<double> kappa;
  std::vector<double> per_pattern_energies;  // y^T M_i y over the pattern set
};

GramSummary gram_summary(const Dataset& ds, const PatternSet& ps);

double lambda_min_sym(const Eigen::MatrixXd& A);
double lambda_max_sym(const Eigen::MatrixXd& A);

/// lambda_max(X X^T) / lambda_min(M); empty when M is numerically singular.
std::optional<double> compute_kappa(const Dataset& ds);

/// sqrt(2) beta ||y|| / sqrt(lambda_min(M)); empty when M is singular.
std::optional<double> bound_upper_gated(const Dataset& ds);

struct LowerBound {
  double value = 0.0;
  double G = 0.0;
  bool exact = false;  // true when ps covered every realizable pattern
};

/// G beta ||y|| / sqrt(lambda_max(X X^T)) with
/// G = 1 - beta / (2 max_i sqrt(y^T M_i y)); the max over a sampled set
/// underestimates the true max, so the result is flagged heuristic unless the
/// set was fully enumerated.
LowerBound bound_lower_full(const Dataset& ds, const PatternSet& ps_for_max);

/// (sqrt(2)/G) max_i sqrt(y^T M_i y) sqrt(y^T M_P^{-1} y) / ||y||^2; empty
/// when the sampled Gram is singular.
std::optional<double> bound_tighter_factor(const Dataset& ds, const PatternSet& ps);

/// sqrt(max_b b^T diag(y) X X^T diag(y) b) over binary b, by exhaustive
/// enumeration (Gray-code updates). Guarded to n <= 20.
double bound_maxcut(const Dataset& ds);

/// Pattern-count thresholds behind the guarantees, keyed by role:
///   exact_fit         ceil(2 kappa log(n/delta))
///   l2_concentration  ceil(12 kappa log(2n/delta))
///   gated_upper       ceil(8 kappa log(n/delta))
///   width_floor       ceil(320 (sqrt(c)+1)^2 log(n/delta))   [needs c]
std::map<std::string, long> sample_thresholds(double kappa, int n, double delta,
                                              std::optional<double> c = std::nullopt);

}  // namespace relucvx
