#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "acceptance/criteria.hpp"
#include "relucvx/bounds.hpp"
#include "relucvx/dataset.hpp"
#include "relucvx/decomposition.hpp"
#include "relucvx/experiments.hpp"
#include "relucvx/io.hpp"
#include "relucvx/network.hpp"
#include "relucvx/patterns.hpp"
#include "relucvx/solvers.hpp"

namespace {

using nlohmann::json;
using namespace relucvx;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;     // bad flags, unreadable files, invalid values
constexpr int kExitUncertified = 3;
constexpr int kExitVerifyFailed = 4;

json g_config;  // parsed --config body, applied where the command line is silent

// Fills `target` from the config file when the option was not given on the
// command line.
template <typename T>
void config_default(const CLI::App* cmd, const std::string& opt_name, T& target) {
  const CLI::Option* opt = cmd->get_option_no_throw("--" + opt_name);
  if (opt && opt->count() > 0) return;
  if (g_config.contains(opt_name)) target = g_config.at(opt_name).get<T>();
}

void write_or_print(const std::string& body, const std::string& out) {
  if (out.empty()) {
    std::cout << body;
    if (!body.empty() && body.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot open for writing: " + out);
  f << body;
  if (!body.empty() && body.back() != '\n') f << "\n";
}

LabelMode parse_label_mode(const std::string& s) {
  if (s == "gaussian") return LabelMode::random_gaussian;
  if (s == "planted") return LabelMode::planted_network;
  if (s == "file") return LabelMode::file;
  throw CLI::ValidationError("--label-mode", "expected gaussian|planted|file");
}

// Shared dataset source: an explicit file wins over generation parameters.
struct DataArgs {
  std::string data_file;
  int n = 8;
  int d = 3;
  double beta = 0.1;
  std::string label_mode = "gaussian";
  std::string label_file;
  int planted_width = 2;
  std::uint64_t seed = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", data_file, "dataset file (overrides generation flags)");
    cmd->add_option("--n", n, "samples");
    cmd->add_option("--d", d, "features");
    cmd->add_option("--beta", beta, "weight decay strength");
    cmd->add_option("--label-mode", label_mode, "gaussian|planted|file");
    cmd->add_option("--label-file", label_file, "labels for --label-mode file");
    cmd->add_option("--planted-width", planted_width, "teacher width for planted labels");
    cmd->add_option("--seed", seed, "generation seed");
  }

  void apply_config(const CLI::App* cmd) {
    config_default(cmd, "data", data_file);
    config_default(cmd, "n", n);
    config_default(cmd, "d", d);
    config_default(cmd, "beta", beta);
    config_default(cmd, "label-mode", label_mode);
    config_default(cmd, "label-file", label_file);
    config_default(cmd, "planted-width", planted_width);
    config_default(cmd, "seed", seed);
  }

  Dataset load() const {
    if (!data_file.empty()) return load_dataset(data_file);
    return generate_dataset(n, d, beta, parse_label_mode(label_mode), seed, label_file,
                            planted_width);
  }
};

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  if (out.empty()) throw CLI::ValidationError("list", "expected comma-separated numbers");
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_double_list(s)) out.push_back(static_cast<int>(v));
  return out;
}

PatternSet patterns_from_args(const Dataset& ds, const std::string& pattern_file, int count,
                              bool enumerate, std::uint64_t seed) {
  if (!pattern_file.empty()) {
    PatternSet ps = load_pattern_set(pattern_file);
    if (ps.size() > 0 && ps.patterns.front().size() != ds.n())
      throw std::runtime_error("pattern length does not match the dataset");
    return ps;
  }
  if (enumerate) return enumerate_patterns(ds);
  return sample_patterns(ds, count, seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relucvx: randomized convex relaxations of two-layer ReLU training, with"
               " certified optimality gaps"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON file with defaults for the invoked command");
  int jobs = 2;
  app.add_option("--jobs", jobs, "worker threads for seed-indexed trials");

  // gen ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate a dataset and write it as text");
  DataArgs gen_args;
  gen_args.attach(gen);
  std::string gen_out;
  gen->add_option("--out", gen_out, "output path (stdout if omitted)");

  // sample --------------------------------------------------------------
  auto* sample = app.add_subcommand("sample", "sample activation patterns from Gaussian gates");
  DataArgs sample_args;
  sample_args.attach(sample);
  int sample_count = 10;
  std::uint64_t sample_seed = 1;
  std::string sample_out;
  sample->add_option("--count", sample_count, "distinct patterns requested");
  sample->add_option("--pattern-seed", sample_seed, "sampling seed");
  sample->add_option("--out", sample_out, "output path");

  // enumerate via sample --enumerate? keep a flag on sample
  bool sample_enumerate = false;
  sample->add_flag("--enumerate", sample_enumerate, "enumerate all realizable patterns instead");

  // solve-gated ----------------------------------------------------------
  auto* sgated = app.add_subcommand("solve-gated", "solve the gated group-lasso problem");
  DataArgs sgated_args;
  sgated_args.attach(sgated);
  std::string sgated_patterns, sgated_out;
  int sgated_count = 10;
  std::uint64_t sgated_pseed = 1;
  bool sgated_enum = false;
  double sgated_tol = 1e-8;
  int sgated_iters = 200000;
  std::string sgated_step = "fixed";
  sgated->add_option("--patterns", sgated_patterns, "pattern file");
  sgated->add_option("--count", sgated_count, "sampled patterns when no file given");
  sgated->add_option("--pattern-seed", sgated_pseed, "sampling seed");
  sgated->add_flag("--enumerate", sgated_enum, "use the full enumeration");
  sgated->add_option("--tol", sgated_tol, "KKT tolerance");
  sgated->add_option("--max-iters", sgated_iters, "iteration cap");
  sgated->add_option("--step-rule", sgated_step, "fixed|backtracking");
  sgated->add_option("--out", sgated_out, "output path");

  // solve-cone -----------------------------------------------------------
  auto* scone = app.add_subcommand("solve-cone", "solve the cone-constrained relaxation");
  DataArgs scone_args;
  scone_args.attach(scone);
  std::string scone_patterns, scone_out;
  int scone_count = 10;
  std::uint64_t scone_pseed = 1;
  bool scone_enum = false;
  double scone_tol = 1e-6;
  int scone_iters = 200000;
  scone->add_option("--patterns", scone_patterns, "pattern file");
  scone->add_option("--count", scone_count, "sampled patterns when no file given");
  scone->add_option("--pattern-seed", scone_pseed, "sampling seed");
  scone->add_flag("--enumerate", scone_enum, "use the full enumeration");
  scone->add_option("--tol", scone_tol, "combined residual tolerance");
  scone->add_option("--max-iters", scone_iters, "iteration cap");
  scone->add_option("--out", scone_out, "output path");

  // decompose -------------------------------------------------------------
  auto* dec = app.add_subcommand("decompose", "minimum-norm cone decomposition of a vector");
  DataArgs dec_args;
  dec_args.attach(dec);
  std::string dec_pattern, dec_w, dec_out;
  dec->add_option("--pattern", dec_pattern, "0/1 mask string (defaults to a sampled pattern)");
  dec->add_option("--w", dec_w, "comma-separated vector to decompose")->required();
  dec->add_option("--out", dec_out, "output path");

  // bounds ------------------------------------------------------------------
  auto* bounds_cmd = app.add_subcommand("bounds", "compute the full bound report");
  DataArgs bounds_args;
  bounds_args.attach(bounds_cmd);
  int bounds_ptilde = 0;
  double bounds_delta = 0.1;
  std::string bounds_out;
  bounds_cmd->add_option("--ptilde", bounds_ptilde, "sampled patterns for heuristic G (0 = auto)");
  bounds_cmd->add_option("--delta", bounds_delta, "failure probability for thresholds");
  bounds_cmd->add_option("--out", bounds_out, "output path");

  // train ---------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "gradient-descent training of the ReLU network");
  DataArgs train_args;
  train_args.attach(train);
  int train_m = 64, train_steps = 1000, train_snap = 50;
  double train_lr = 0.0;
  std::uint64_t train_init_seed = 1;
  std::string train_out, train_net_out;
  train->add_option("--m", train_m, "network width");
  train->add_option("--steps", train_steps, "gradient steps");
  train->add_option("--snapshot-every", train_snap, "pattern snapshot cadence");
  train->add_option("--lr", train_lr, "fixed step size (0 = backtracking)");
  train->add_option("--init-seed", train_init_seed, "initialization seed");
  train->add_option("--out", train_out, "trace CSV path");
  train->add_option("--net-out", train_net_out, "trained parameters path");

  // pipeline --------------------------------------------------------------------
  auto* pipe = app.add_subcommand("pipeline",
                                  "sample patterns, solve the relaxation, map to a network");
  DataArgs pipe_args;
  pipe_args.attach(pipe);
  int pipe_m = 0;
  double pipe_delta = 0.1;
  double pipe_tol = 1e-8;
  int pipe_iters = 200000;
  std::string pipe_out;
  pipe->add_option("--m", pipe_m, "width (0 = the width floor for n, c, delta)");
  pipe->add_option("--delta", pipe_delta, "failure probability");
  pipe->add_option("--tol", pipe_tol, "cone solver tolerance");
  pipe->add_option("--max-iters", pipe_iters, "cone solver iteration cap");
  pipe->add_option("--out", pipe_out, "output path");

  // width-sweep --------------------------------------------------------------------
  auto* sweep = app.add_subcommand("width-sweep", "objective vs number of sampled patterns");
  std::string sweep_betas = "10,20,40", sweep_grid = "1,2,5,10,20,30,50,100", sweep_out;
  int sweep_n = 300, sweep_d = 10;
  std::uint64_t sweep_seed = 1;
  bool sweep_cone = false;
  double sweep_tol = 1e-7;
  int sweep_iters = 30000;
  std::string sweep_label_mode = "gaussian";
  sweep->add_option("--n", sweep_n, "samples");
  sweep->add_option("--d", sweep_d, "features");
  sweep->add_option("--label-mode", sweep_label_mode, "gaussian|planted");
  sweep->add_option("--betas", sweep_betas, "comma-separated weight decays");
  sweep->add_option("--grid", sweep_grid, "comma-separated pattern counts");
  sweep->add_option("--seed", sweep_seed, "seed");
  sweep->add_flag("--include-cone", sweep_cone, "also solve the cone-constrained problem");
  sweep->add_option("--tol", sweep_tol, "solver tolerance");
  sweep->add_option("--max-iters", sweep_iters, "solver iteration cap");
  sweep->add_option("--out", sweep_out, "CSV path");

  // drift ------------------------------------------------------------------------
  auto* drift = app.add_subcommand("drift", "activation-pattern drift during training");
  DataArgs drift_args;
  drift_args.n = 200;
  drift_args.d = 50;
  drift_args.attach(drift);
  int drift_m = 100, drift_steps = 2000, drift_snap = 50;
  double drift_lr = 0.0;
  std::string drift_out;
  drift->add_option("--m", drift_m, "network width");
  drift->add_option("--steps", drift_steps, "gradient steps");
  drift->add_option("--snapshot-every", drift_snap, "snapshot cadence");
  drift->add_option("--lr", drift_lr, "fixed step size (0 = backtracking)");
  drift->add_option("--out", drift_out, "trace CSV path");

  // verify -------------------------------------------------------------------------
  auto* verify = app.add_subcommand("verify", "run the statistical verification suite");
  int verify_criterion = 0;
  verify->add_option("--criterion", verify_criterion, "run a single criterion (1-based)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw std::runtime_error("cannot open config: " + config_path);
      f >> g_config;
    }

    if (gen->parsed()) {
      gen_args.apply_config(gen);
      config_default(gen, "out", gen_out);
      const Dataset ds = gen_args.load();
      if (gen_out.empty()) {
        std::ostringstream tmp;
        const std::string path = "/tmp/relucvx_gen_stdout.csv";
        save_dataset(ds, path);
        std::ifstream back(path);
        std::cout << back.rdbuf();
      } else {
        save_dataset(ds, gen_out);
      }
      return kExitOk;
    }

    if (sample->parsed()) {
      sample_args.apply_config(sample);
      config_default(sample, "count", sample_count);
      config_default(sample, "pattern-seed", sample_seed);
      config_default(sample, "out", sample_out);
      const Dataset ds = sample_args.load();
      const PatternSet ps = sample_enumerate ? enumerate_patterns(ds)
                                             : sample_patterns(ds, sample_count, sample_seed);
      if (sample_out.empty()) {
        const std::string path = "/tmp/relucvx_sample_stdout.txt";
        save_pattern_set(ps, path);
        std::ifstream back(path);
        std::cout << back.rdbuf();
      } else {
        save_pattern_set(ps, sample_out);
      }
      return kExitOk;
    }

    if (sgated->parsed()) {
      sgated_args.apply_config(sgated);
      config_default(sgated, "tol", sgated_tol);
      config_default(sgated, "max-iters", sgated_iters);
      config_default(sgated, "out", sgated_out);
      const Dataset ds = sgated_args.load();
      const PatternSet ps =
          patterns_from_args(ds, sgated_patterns, sgated_count, sgated_enum, sgated_pseed);
      SolverConfig cfg;
      cfg.tol_kkt = sgated_tol;
      cfg.max_iters = sgated_iters;
      cfg.step_rule = sgated_step == "backtracking" ? StepRule::backtracking : StepRule::fixed;
      const GatedSolution sol = solve_gated(ds, ps, cfg);
      write_or_print(gated_solution_to_json(sol, ps), sgated_out);
      return sol.certified ? kExitOk : kExitUncertified;
    }

    if (scone->parsed()) {
      scone_args.apply_config(scone);
      config_default(scone, "tol", scone_tol);
      config_default(scone, "max-iters", scone_iters);
      config_default(scone, "out", scone_out);
      const Dataset ds = scone_args.load();
      const PatternSet ps =
          patterns_from_args(ds, scone_patterns, scone_count, scone_enum, scone_pseed);
      SolverConfig cfg;
      cfg.tol_kkt = scone_tol;
      cfg.max_iters = scone_iters;
      const ConeSolution sol = solve_cone_constrained(ds, ps, cfg);
      write_or_print(cone_solution_to_json(sol, ps), scone_out);
      return sol.certified ? kExitOk : kExitUncertified;
    }

    if (dec->parsed()) {
      dec_args.apply_config(dec);
      const Dataset ds = dec_args.load();
      Pattern D;
      if (dec_pattern.empty()) {
        D = sample_patterns(ds, 1, dec_args.seed + 1).patterns.front();
      } else {
        for (char ch : dec_pattern) {
          if (ch != '0' && ch != '1')
            throw std::runtime_error("--pattern must be a 0/1 string");
          D.mask.push_back(ch == '1' ? 1 : 0);
        }
        if (D.size() != ds.n()) throw std::runtime_error("--pattern length must equal n");
      }
      const std::vector<double> wv = parse_double_list(dec_w);
      if (static_cast<Eigen::Index>(wv.size()) != ds.d())
        throw std::runtime_error("--w length must equal d");
      Eigen::VectorXd w(ds.d());
      for (Eigen::Index i = 0; i < ds.d(); ++i) w(i) = wv[static_cast<std::size_t>(i)];
      SolverConfig cfg;
      const Decomposition out = decompose_min_norm(ds, D, w, cfg);
      json j;
      j["u"] = std::vector<double>(out.u.data(), out.u.data() + out.u.size());
      j["v"] = std::vector<double>(out.v.data(), out.v.data() + out.v.size());
      j["norm_sum"] = out.norm_sum;
      j["sharpness"] = out.sharpness;
      j["certified"] = out.certified;
      write_or_print(j.dump(2), dec_out);
      return out.certified ? kExitOk : kExitUncertified;
    }

    if (bounds_cmd->parsed()) {
      bounds_args.apply_config(bounds_cmd);
      config_default(bounds_cmd, "ptilde", bounds_ptilde);
      config_default(bounds_cmd, "delta", bounds_delta);
      config_default(bounds_cmd, "out", bounds_out);
      BoundsConfig cfg;
      cfg.n = bounds_args.n;
      cfg.d = bounds_args.d;
      cfg.beta = bounds_args.beta;
      cfg.seed = bounds_args.seed;
      cfg.delta = bounds_delta;
      cfg.ptilde = bounds_ptilde;
      cfg.label_mode = parse_label_mode(bounds_args.label_mode);
      BoundReport rep;
      if (!bounds_args.data_file.empty()) {
        const Dataset ds = load_dataset(bounds_args.data_file);
        rep = run_bounds(cfg, &ds);
      } else {
        rep = run_bounds(cfg);
      }
      write_or_print(report_to_json(rep), bounds_out);
      return kExitOk;
    }

    if (train->parsed()) {
      train_args.apply_config(train);
      config_default(train, "m", train_m);
      config_default(train, "steps", train_steps);
      config_default(train, "lr", train_lr);
      config_default(train, "out", train_out);
      const Dataset ds = train_args.load();
      const NetworkParams p0 = init_network(train_m, static_cast<int>(ds.d()), train_init_seed);
      TrainOptions opt;
      if (train_lr > 0.0) opt.lr = train_lr;
      opt.steps = train_steps;
      opt.snapshot_every = train_snap;
      const TrainResult res = train_gd(ds, p0, opt);
      if (!train_out.empty()) save_trace_csv(res.trace, train_out);
      if (!train_net_out.empty()) save_network(res.params, train_net_out);
      json j;
      j["final_loss"] = res.trace.losses.back();
      j["steps"] = res.trace.losses.size() - 1;
      j["grad_norm"] = res.grad_norm;
      j["drift_fraction"] = res.trace.drift_fraction;
      j["status"] = res.status == TrainStatus::converged
                        ? "converged"
                        : (res.status == TrainStatus::diverged ? "diverged" : "max_steps");
      std::cout << j.dump(2) << "\n";
      return res.status == TrainStatus::diverged ? kExitUncertified : kExitOk;
    }

    if (pipe->parsed()) {
      pipe_args.apply_config(pipe);
      config_default(pipe, "m", pipe_m);
      config_default(pipe, "delta", pipe_delta);
      config_default(pipe, "out", pipe_out);
      PipelineConfig cfg;
      cfg.n = pipe_args.n;
      cfg.d = pipe_args.d;
      cfg.beta = pipe_args.beta;
      cfg.seed = pipe_args.seed;
      cfg.delta = pipe_delta;
      cfg.m = pipe_m;
      cfg.label_mode = parse_label_mode(pipe_args.label_mode);
      cfg.solver.tol_kkt = pipe_tol;
      cfg.solver.max_iters = pipe_iters;
      const PipelineResult res = run_pipeline(cfg);
      write_or_print(pipeline_to_json(res), pipe_out);
      return res.convex_certified ? kExitOk : kExitUncertified;
    }

    if (sweep->parsed()) {
      config_default(sweep, "n", sweep_n);
      config_default(sweep, "d", sweep_d);
      config_default(sweep, "betas", sweep_betas);
      config_default(sweep, "grid", sweep_grid);
      config_default(sweep, "seed", sweep_seed);
      config_default(sweep, "out", sweep_out);
      WidthSweepConfig cfg;
      cfg.n = sweep_n;
      cfg.d = sweep_d;
      cfg.betas = parse_double_list(sweep_betas);
      cfg.ptilde_grid = parse_int_list(sweep_grid);
      cfg.seed = sweep_seed;
      cfg.label_mode = parse_label_mode(sweep_label_mode);
      cfg.include_cone = sweep_cone;
      cfg.solver.tol_kkt = sweep_tol;
      cfg.solver.max_iters = sweep_iters;
      const auto rows = run_width_sweep(cfg);
      write_or_print(width_sweep_csv(rows), sweep_out);
      for (const auto& row : rows)
        if (!row.gated_certified || (row.cone_objective && !row.cone_certified))
          return kExitUncertified;
      return kExitOk;
    }

    if (drift->parsed()) {
      drift_args.apply_config(drift);
      config_default(drift, "m", drift_m);
      config_default(drift, "steps", drift_steps);
      config_default(drift, "out", drift_out);
      DriftConfig cfg;
      cfg.n = drift_args.n;
      cfg.d = drift_args.d;
      cfg.m = drift_m;
      cfg.beta = drift_args.beta;
      cfg.steps = drift_steps;
      cfg.snapshot_every = drift_snap;
      if (drift_lr > 0.0) cfg.lr = drift_lr;
      cfg.seed = drift_args.seed;
      cfg.label_mode = parse_label_mode(drift_args.label_mode);
      TrainResult res;
      if (!drift_args.data_file.empty()) {
        const Dataset ds = load_dataset(drift_args.data_file);
        res = run_drift(cfg, &ds);
      } else {
        res = run_drift(cfg);
      }
      if (!drift_out.empty()) {
        save_trace_csv(res.trace, drift_out);
      } else {
        save_trace_csv(res.trace, "/tmp/relucvx_drift_stdout.csv");
        std::ifstream back("/tmp/relucvx_drift_stdout.csv");
        std::cout << back.rdbuf();
      }
      return res.status == TrainStatus::diverged ? kExitUncertified : kExitOk;
    }

    if (verify->parsed()) {
      int failures = 0;
      const int lo = verify_criterion > 0 ? verify_criterion : 1;
      const int hi = verify_criterion > 0 ? verify_criterion : acceptance::criterion_count();
      int passed = 0, total = 0;
      for (int id = lo; id <= hi; ++id) {
        const auto res = acceptance::run_criterion(id, jobs);
        std::printf("[%s] criterion %2d: %s (%.1fs) -- %s\n", res.passed ? "PASS" : "FAIL",
                    res.id, res.name.c_str(), res.seconds, res.detail.c_str());
        std::fflush(stdout);
        ++total;
        if (res.passed)
          ++passed;
        else
          ++failures;
      }
      std::printf("%d/%d criteria passed\n", passed, total);
      return failures == 0 ? kExitOk : kExitVerifyFailed;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
