#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "relucvx/core.hpp"
#include "relucvx/patterns.hpp"
#include "relucvx/solvers.hpp"

namespace relucvx {

/// Two-layer ReLU network: neuron j has inner weights U.col(j) and outer
/// weight alpha(j).
struct NetworkParams {
  Eigen::MatrixXd U;      // d x m
  Eigen::VectorXd alpha;  // m

  Eigen::Index width() const { return alpha.size(); }
};

using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;  // n x m

struct TrainTrace {
  std::vector<double> losses;                  // objective per step, losses[0] at init
  std::vector<int> snapshot_steps;
  std::vector<MaskMatrix> pattern_snapshots;   // activation masks at snapshot steps
  double drift_fraction = 0.0;                 // changed bits (first vs last) / (m n)
};

enum class TrainStatus { converged, max_steps, diverged };

struct TrainResult {
  NetworkParams params;
  TrainTrace trace;
  TrainStatus status = TrainStatus::max_steps;
  double grad_norm = 0.0;
};

struct TrainOptions {
  std::optional<double> lr;  // fixed step; nullopt selects backtracking
  int steps = 1000;
  int snapshot_every = 50;
};

/// Entries of U and alpha i.i.d. normal with variance 1/m.
NetworkParams init_network(int m, int d, std::uint64_t seed);

/// 1/2 || sum_j (X u_j)_+ alpha_j - y ||^2 + beta/2 (||U||_F^2 + ||alpha||^2)
double network_loss(const Dataset& ds, const NetworkParams& p);

/// Full-batch subgradient descent (ReLU derivative 0 at 0). Backtracking
/// makes per-step losses nonincreasing; a fixed step carries no such
/// guarantee. Aborts as diverged when the loss exceeds 1e6 x initial.
TrainResult train_gd(const Dataset& ds, const NetworkParams& p0, const TrainOptions& opt);

/// Fraction of (neuron, sample) activation indicators that changed between
/// the first and last snapshots. Requires >= 2 snapshots.
double pattern_drift(const TrainTrace& trace);

/// Norm-balanced mapping from a cone-feasible convex solution to network
/// parameters: nonzero u_i becomes (u_i / sqrt(||u_i||), +sqrt(||u_i||)),
/// nonzero v_i the same with a negative outer weight. Network loss of the
/// result equals the convex objective. Refuses solutions whose cone
/// violation would break that identity.
NetworkParams convex_to_network(const ConeSolution& sol, const PatternSet& ps);

/// Per-neuron activation masks, deduplicated.
PatternSet network_to_convex_patterns(const NetworkParams& p, const Dataset& ds);

/// ceil(320 (sqrt(c)+1)^2 log(n/delta)), the width floor behind the
/// randomized training guarantee.
long width_floor(double c, int n, double delta);

}  // namespace relucvx
