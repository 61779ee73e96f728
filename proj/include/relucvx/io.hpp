#pragma once

#include <string>

#include "relucvx/core.hpp"
#include "relucvx/network.hpp"
#include "relucvx/patterns.hpp"
#include "relucvx/solvers.hpp"

namespace relucvx {

/// Dataset text format: first line "n,d,beta", then n comma-separated rows of
/// X, then one line with the n labels. Doubles are printed with 17
/// significant digits so save/load round-trips bit-exactly.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Reports are JSON with field names matching the struct fields; optional
/// values serialize as the string "undefined".
void save_report(const BoundReport& report, const std::string& path);
BoundReport load_report(const std::string& path);
std::string report_to_json(const BoundReport& report);

/// One 0/1 line per pattern after a provenance header.
void save_pattern_set(const PatternSet& ps, const std::string& path);
PatternSet load_pattern_set(const std::string& path);

std::string gated_solution_to_json(const GatedSolution& sol, const PatternSet& ps);
std::string cone_solution_to_json(const ConeSolution& sol, const PatternSet& ps);

/// TrainTrace CSV: header "step,loss,drift_so_far"; drift is filled at
/// snapshot steps (relative to the first snapshot) and left blank elsewhere.
void save_trace_csv(const TrainTrace& trace, const std::string& path);

/// NetworkParams in the dataset text format: "m,d", m rows (the transposed
/// inner weights), then one line of outer weights.
void save_network(const NetworkParams& p, const std::string& path);
NetworkParams load_network(const std::string& path);

}  // namespace relucvx
