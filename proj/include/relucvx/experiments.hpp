#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relucvx/bounds.hpp"
#include "relucvx/core.hpp"
#include "relucvx/network.hpp"
#include "relucvx/patterns.hpp"
#include "relucvx/solvers.hpp"

namespace relucvx {

/// Re-indexes blocks solved on a subset of patterns into the block layout of
/// a superset (matching by mask; missing blocks are zero). Lets objectives of
/// nested solves be compared under one evaluator.
Blocks embed_blocks(const PatternSet& subset, const Blocks& w, const PatternSet& superset);
std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> embed_pairs(
    const PatternSet& subset, const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs,
    const PatternSet& superset);

struct WidthSweepConfig {
  int n = 300;
  int d = 10;
  std::vector<double> betas = {10.0, 20.0, 40.0};
  std::vector<int> ptilde_grid = {1, 2, 5, 10, 20, 30, 50, 100};
  std::uint64_t seed = 1;
  LabelMode label_mode = LabelMode::random_gaussian;
  bool include_cone = false;
  SolverConfig solver{1e-7, 20000, StepRule::fixed, 0};
};

struct WidthSweepRow {
  int ptilde = 0;          // distinct patterns actually used
  int requested = 0;
  double beta = 0.0;
  double gated_objective = 0.0;
  bool gated_certified = false;
  std::optional<double> cone_objective;
  bool cone_certified = false;
};

/// One row per (beta, grid point), patterns nested under the shared seed,
/// each solve warm-started from the previous grid point so reported
/// objectives are nonincreasing along the grid.
std::vector<WidthSweepRow> run_width_sweep(const WidthSweepConfig& cfg);

std::string width_sweep_csv(const std::vector<WidthSweepRow>& rows);

struct PipelineConfig {
  int n = 10;
  int d = 2;
  double beta = 0.1;
  std::uint64_t seed = 1;
  double delta = 0.1;
  int m = 0;  // 0 selects the width floor
  LabelMode label_mode = LabelMode::random_gaussian;
  SolverConfig solver{1e-8, 200000, StepRule::fixed, 0};
};

struct PipelineResult {
  long m = 0;
  int ptilde = 0;
  double convex_objective = 0.0;
  bool convex_certified = false;
  double network_loss_value = 0.0;
  double identity_rel_error = 0.0;
  std::optional<double> upper_gated;
  double lower_heuristic = 0.0;
  double wall_ms = 0.0;
};

/// End-to-end randomized training: sample ceil(m/2) patterns, solve the
/// cone-constrained relaxation, map the solution to network parameters, and
/// report the loss identity plus the bound sandwich.
PipelineResult run_pipeline(const PipelineConfig& cfg);
std::string pipeline_to_json(const PipelineResult& r);

struct BoundsConfig {
  int n = 8;
  int d = 3;
  double beta = 0.1;
  std::uint64_t seed = 1;
  double delta = 0.1;
  int ptilde = 0;  // 0 selects the gated_upper threshold (or 8n as fallback)
  LabelMode label_mode = LabelMode::random_gaussian;
};

/// Assembles the full BoundReport for one dataset: eigenvalue extremes,
/// kappa, upper/lower bounds, the tighter relative factor, the max-cut bound
/// when n allows enumeration, and every sampling threshold. G is exact when
/// full enumeration is feasible, otherwise flagged heuristic.
BoundReport run_bounds(const BoundsConfig& cfg, const Dataset* external = nullptr);

struct DriftConfig {
  int n = 200;
  int d = 50;
  int m = 100;
  double beta = 0.1;
  int steps = 2000;
  int snapshot_every = 50;
  std::optional<double> lr;  // nullopt selects backtracking
  std::uint64_t seed = 1;
  LabelMode label_mode = LabelMode::random_gaussian;
};

TrainResult run_drift(const DriftConfig& cfg, const Dataset* external = nullptr);

}  // namespace relucvx
