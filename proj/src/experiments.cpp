#include "relucvx/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "relucvx/dataset.hpp"

namespace relucvx {

namespace {

struct MaskKey {
  std::size_t operator()(const std::vector<std::uint8_t>& m) const {
    std::size_t h = 1469598103934665603ULL;
    for (std::uint8_t b : m) {
      h ^= b;
      h *= 1099511628211ULL;
    }
    return h;
  }
};

std::unordered_map<std::vector<std::uint8_t>, Eigen::Index, MaskKey> index_of(
    const PatternSet& ps) {
  std::unordered_map<std::vector<std::uint8_t>, Eigen::Index, MaskKey> idx;
  for (Eigen::Index i = 0; i < ps.size(); ++i)
    idx.emplace(ps.patterns[static_cast<std::size_t>(i)].mask, i);
  return idx;
}

}  // namespace

Blocks embed_blocks(const PatternSet& subset, const Blocks& w, const PatternSet& superset) {
  if (static_cast<Eigen::Index>(w.size()) != subset.size())
    throw std::invalid_argument("embed_blocks: block count mismatch");
  const auto idx = index_of(superset);
  const auto d = w.empty() ? Eigen::Index(0) : w.front().size();
  Blocks out(static_cast<std::size_t>(superset.size()), Eigen::VectorXd::Zero(d));
  for (Eigen::Index i = 0; i < subset.size(); ++i) {
    const auto it = idx.find(subset.patterns[static_cast<std::size_t>(i)].mask);
    if (it == idx.end())
      throw std::invalid_argument("embed_blocks: subset pattern missing from superset");
    out[static_cast<std::size_t>(it->second)] += w[static_cast<std::size_t>(i)];
  }
  return out;
}

std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> embed_pairs(
    const PatternSet& subset, const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs,
    const PatternSet& superset) {
  if (static_cast<Eigen::Index>(pairs.size()) != subset.size())
    throw std::invalid_argument("embed_pairs: block count mismatch");
  const auto idx = index_of(superset);
  const auto d = pairs.empty() ? Eigen::Index(0) : pairs.front().first.size();
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> out(
      static_cast<std::size_t>(superset.size()),
      {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)});
  for (Eigen::Index i = 0; i < subset.size(); ++i) {
    const auto it = idx.find(subset.patterns[static_cast<std::size_t>(i)].mask);
    if (it == idx.end())
      throw std::invalid_argument("embed_pairs: subset pattern missing from superset");
    out[static_cast<std::size_t>(it->second)] = pairs[static_cast<std::size_t>(i)];
  }
  return out;
}

std::vector<WidthSweepRow> run_width_sweep(const WidthSweepConfig& cfg) {
  std::vector<WidthSweepRow> rows;
  const int max_requested = *std::max_element(cfg.ptilde_grid.begin(), cfg.ptilde_grid.end());
  for (const double beta : cfg.betas) {
    Dataset ds = generate_dataset(cfg.n, cfg.d, beta, cfg.label_mode, cfg.seed);
    // One shared draw stream: the set at each grid point is a prefix of the
    // set at the next, so certified objectives are nonincreasing.
    const PatternSet full = sample_patterns(ds, max_requested, cfg.seed);

    Blocks warm_w;
    ConeSolution warm_cone;
    PatternSet prev;
    prev.provenance = Provenance::sampled;
    prev.seed = cfg.seed;
    for (const int req : cfg.ptilde_grid) {
      PatternSet ps;
      ps.provenance = Provenance::sampled;
      ps.seed = cfg.seed;
      ps.count_requested = req;
      const auto take = std::min<std::size_t>(static_cast<std::size_t>(req), full.patterns.size());
      ps.patterns.assign(full.patterns.begin(), full.patterns.begin() + static_cast<long>(take));

      WidthSweepRow row;
      row.requested = req;
      row.ptilde = static_cast<int>(ps.size());
      row.beta = beta;

      const Blocks* warm_ptr = nullptr;
      Blocks warm_embedded;
      if (!warm_w.empty()) {
        warm_embedded = embed_blocks(prev, warm_w, ps);
        warm_ptr = &warm_embedded;
      }
      const GatedSolution g = solve_gated(ds, ps, cfg.solver, warm_ptr);
      row.gated_objective = g.objective;
      row.gated_certified = g.certified;
      warm_w = g.weights;

      if (cfg.include_cone) {
        ConeSolution warm_c;
        const ConeSolution* warm_c_ptr = nullptr;
        if (!warm_cone.pairs.empty()) {
          warm_c.pairs = embed_pairs(prev, warm_cone.pairs, ps);
          warm_c_ptr = &warm_c;
        }
        const ConeSolution c = solve_cone_constrained(ds, ps, cfg.solver, warm_c_ptr);
        row.cone_objective = c.objective;
        row.cone_certified = c.certified;
        warm_cone = c;
      }
      prev = ps;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string width_sweep_csv(const std::vector<WidthSweepRow>& rows) {
  std::ostringstream out;
  out << "ptilde,requested,beta,gated_objective,gated_certified,cone_objective,cone_certified\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.beta);
    out << r.ptilde << "," << r.requested << "," << buf << ",";
    std::snprintf(buf, sizeof(buf), "%.17g", r.gated_objective);
    out << buf << "," << (r.gated_certified ? 1 : 0) << ",";
    if (r.cone_objective) {
      std::snprintf(buf, sizeof(buf), "%.17g", *r.cone_objective);
      out << buf;
    }
    out << "," << (r.cone_certified ? 1 : 0) << "\n";
  }
  return out.str();
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  if (cfg.m != 0 && cfg.m < 2) throw std::invalid_argument("run_pipeline: m must be >= 2");
  const auto t0 = std::chrono::steady_clock::now();

  Dataset ds = generate_dataset(cfg.n, cfg.d, cfg.beta, cfg.label_mode, cfg.seed);
  PipelineResult out;
  out.m = cfg.m != 0 ? cfg.m : width_floor(ds.c(), cfg.n, cfg.delta);
  const long requested = (out.m + 1) / 2;
  const PatternSet ps =
      sample_patterns(ds, static_cast<int>(std::min<long>(requested, 1L << 22)), cfg.seed + 1);
  out.ptilde = static_cast<int>(ps.size());

  const ConeSolution sol = solve_cone_constrained(ds, ps, cfg.solver);
  out.convex_objective = sol.objective;
  out.convex_certified = sol.certified;

  const NetworkParams net = convex_to_network(sol, ps);
  out.network_loss_value = network_loss(ds, net);
  out.identity_rel_error = std::abs(out.network_loss_value - sol.objective) /
                           std::max(1e-300, std::abs(sol.objective));

  out.upper_gated = bound_upper_gated(ds);
  out.lower_heuristic = bound_lower_full(ds, ps).value;

  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
  return out;
}

std::string pipeline_to_json(const PipelineResult& r) {
  nlohmann::json j;
  j["m"] = r.m;
  j["ptilde"] = r.ptilde;
  j["convex_objective"] = r.convex_objective;
  j["convex_certified"] = r.convex_certified;
  j["network_loss"] = r.network_loss_value;
  j["identity_rel_error"] = r.identity_rel_error;
  if (r.upper_gated)
    j["upper_gated"] = *r.upper_gated;
  else
    j["upper_gated"] = "undefined";
  j["lower_heuristic"] = r.lower_heuristic;
  j["wall_ms"] = r.wall_ms;
  return j.dump(2);
}

BoundReport run_bounds(const BoundsConfig& cfg, const Dataset* external) {
  const Dataset ds = external
                         ? *external
                         : generate_dataset(cfg.n, cfg.d, cfg.beta, cfg.label_mode, cfg.seed);
  BoundReport rep;
  const Eigen::MatrixXd M = expected_gram(ds);
  rep.lambda_min_M = lambda_min_sym(M);
  rep.lambda_max_gram = lambda_max_sym(ds.X * ds.X.transpose());
  if (rep.lambda_min_M > 1e-10 * lambda_max_sym(M))
    rep.kappa = rep.lambda_max_gram / rep.lambda_min_M;

  if (const auto up = bound_upper_gated(ds)) rep.upper_gated = *up;

  PatternSet ps_for_max;
  if (ds.n() <= 14 && ds.d() <= 6) {
    ps_for_max = enumerate_patterns(ds);
  } else {
    int count = cfg.ptilde;
    if (count <= 0) {
      count = static_cast<int>(8 * ds.n());
      if (rep.kappa) {
        const auto th = sample_thresholds(*rep.kappa, static_cast<int>(ds.n()), cfg.delta);
        count = static_cast<int>(std::min<long>(th.at("gated_upper"), 4096));
      }
    }
    ps_for_max = sample_patterns(ds, count, cfg.seed + 17);
  }
  const LowerBound lb = bound_lower_full(ds, ps_for_max);
  rep.G = lb.G;
  rep.g_exact = lb.exact;
  rep.lower_full = lb.value;
  rep.tighter_upper_factor = bound_tighter_factor(ds, ps_for_max);
  if (ds.n() <= 20) rep.maxcut_value = bound_maxcut(ds);
  if (rep.kappa)
    rep.sample_thresholds =
        sample_thresholds(*rep.kappa, static_cast<int>(ds.n()), cfg.delta, ds.c());
  return rep;
}

TrainResult run_drift(const DriftConfig& cfg, const Dataset* external) {
  const Dataset ds = external
                         ? *external
                         : generate_dataset(cfg.n, cfg.d, cfg.beta, cfg.label_mode, cfg.seed);
  const NetworkParams p0 = init_network(cfg.m, static_cast<int>(ds.d()), cfg.seed + 1);
  TrainOptions opt;
  opt.lr = cfg.lr;
  opt.steps = cfg.steps;
  opt.snapshot_every = cfg.snapshot_every;
  return train_gd(ds, p0, opt);
}

}  // namespace relucvx
