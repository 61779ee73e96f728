#pragma once

#include <cstdint>
#include <string>

#include "relucvx/core.hpp"

namespace relucvx {

/// Teacher parameters used by LabelMode::planted_network; kept so tests can
/// replay the forward pass.
struct PlantedTeacher {
  Eigen::MatrixXd U;      // d x m
  Eigen::VectorXd alpha;  // m
};

/// Draws X with i.i.d. standard normal entries (rows with exactly zero norm
/// are resampled) and fills y according to `mode`:
///   random_gaussian  y_i ~ N(0,1)
///   planted_network  y = sum_j (X u_j)_+ alpha_j for a small random teacher
///   file             y read from `label_file` (one value per line)
/// Deterministic given (n, d, mode, seed).
Dataset generate_dataset(int n, int d, double beta, LabelMode mode, std::uint64_t seed,
                         const std::string& label_file = {}, int planted_width = 2,
                         PlantedTeacher* teacher_out = nullptr);

}  // namespace relucvx
