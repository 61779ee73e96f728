#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace relucvx {

/// Training data: dense X (n samples by d features), labels y, weight decay
/// strength beta. The aspect ratio c = n/d is always recomputed from the
/// stored shapes, never read from a file.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  double beta = 0.0;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index d() const { return X.cols(); }
  double c() const { return static_cast<double>(X.rows()) / static_cast<double>(X.cols()); }
};

enum class LabelMode { random_gaussian, planted_network, file };

enum class StepRule { fixed, backtracking };

struct SolverConfig {
  double tol_kkt = 1e-8;
  int max_iters = 200000;
  StepRule step_rule = StepRule::fixed;
  std::uint64_t seed = 0;
};

/// Everything the bound machinery certifies about one dataset. Optional
/// fields are reported as an explicit "undefined" marker when the defining
/// matrix is singular (or, for the max-cut value, when n is too large to
/// enumerate).
struct BoundReport {
  double lambda_max_gram = 0.0;
  double lambda_min_M = 0.0;
  std::optional<double> kappa;
  double G = 0.0;
  bool g_exact = false;
  double upper_gated = 0.0;
  double lower_full = 0.0;
  std::optional<double> tighter_upper_factor;
  std::optional<double> maxcut_value;
  std::map<std::string, long> sample_thresholds;
};

}  // namespace relucvx
