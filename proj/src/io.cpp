#include "relucvx/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace relucvx {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("malformed " + what + ": '" + s + "'");
  }
}

json optional_to_json(const std::optional<double>& v) {
  if (v) return *v;
  return "undefined";
}

std::optional<double> optional_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  return std::nullopt;
}

json masks_json(const PatternSet& ps) {
  json arr = json::array();
  for (const Pattern& p : ps.patterns) arr.push_back(p.to_string());
  return arr;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << ds.n() << "," << ds.d() << "," << fmt(ds.beta) << "\n";
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < ds.d(); ++j) out << (j ? "," : "") << fmt(ds.X(i, j));
    out << "\n";
  }
  for (Eigen::Index i = 0; i < ds.n(); ++i) out << (i ? "," : "") << fmt(ds.y(i));
  out << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset file: " + path);
  const auto header = split_csv(line);
  if (header.size() != 3) throw std::runtime_error("malformed dataset header: " + path);
  const int n = static_cast<int>(parse_double(header[0], "n"));
  const int d = static_cast<int>(parse_double(header[1], "d"));
  if (n < 1 || d < 1) throw std::runtime_error("dataset header requires n, d >= 1: " + path);

  Dataset ds;
  ds.beta = parse_double(header[2], "beta");
  if (ds.beta < 0.0) throw std::runtime_error("dataset beta must be nonnegative: " + path);
  ds.X.resize(n, d);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("dataset has fewer data rows than declared: " + path);
    const auto row = split_csv(line);
    if (static_cast<int>(row.size()) != d)
      throw std::runtime_error("dataset row has wrong number of entries: " + path);
    for (int j = 0; j < d; ++j) ds.X(i, j) = parse_double(row[j], "X entry");
    if (ds.X.row(i).norm() == 0.0)
      throw std::runtime_error("dataset contains a zero row, activation pattern undefined: " + path);
  }
  if (!std::getline(in, line)) throw std::runtime_error("dataset is missing the label line: " + path);
  const auto labels = split_csv(line);
  if (static_cast<int>(labels.size()) != n)
    throw std::runtime_error("dataset label line has wrong length: " + path);
  ds.y.resize(n);
  for (int i = 0; i < n; ++i) ds.y(i) = parse_double(labels[i], "label");
  return ds;
}

std::string report_to_json(const BoundReport& report) {
  json j;
  j["lambda_max_gram"] = report.lambda_max_gram;
  j["lambda_min_M"] = report.lambda_min_M;
  j["kappa"] = optional_to_json(report.kappa);
  j["G"] = report.G;
  j["g_exact"] = report.g_exact;
  j["upper_gated"] = report.upper_gated;
  j["lower_full"] = report.lower_full;
  j["tighter_upper_factor"] = optional_to_json(report.tighter_upper_factor);
  j["maxcut_value"] = optional_to_json(report.maxcut_value);
  j["sample_thresholds"] = report.sample_thresholds;
  return j.dump(2);
}

void save_report(const BoundReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << report_to_json(report) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

BoundReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed report " + path + ": " + e.what());
  }
  BoundReport r;
  r.lambda_max_gram = j.at("lambda_max_gram").get<double>();
  r.lambda_min_M = j.at("lambda_min_M").get<double>();
  r.kappa = optional_from_json(j.at("kappa"));
  r.G = j.at("G").get<double>();
  r.g_exact = j.at("g_exact").get<bool>();
  r.upper_gated = j.at("upper_gated").get<double>();
  r.lower_full = j.at("lower_full").get<double>();
  r.tighter_upper_factor = optional_from_json(j.at("tighter_upper_factor"));
  r.maxcut_value = optional_from_json(j.at("maxcut_value"));
  r.sample_thresholds = j.at("sample_thresholds").get<std::map<std::string, long>>();
  return r;
}

void save_pattern_set(const PatternSet& ps, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  switch (ps.provenance) {
    case Provenance::sampled:
      out << "# provenance: sampled seed=" << ps.seed << " count_requested=" << ps.count_requested
          << "\n";
      break;
    case Provenance::enumerated:
      out << "# provenance: enumerated\n";
      break;
    case Provenance::paired:
      out << "# provenance: paired\n";
      break;
    case Provenance::explicit_set:
      out << "# provenance: explicit\n";
      break;
  }
  for (const Pattern& p : ps.patterns) out << p.to_string() << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

PatternSet load_pattern_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  PatternSet ps;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty pattern file: " + path);
  if (line.rfind("# provenance: sampled", 0) == 0) {
    ps.provenance = Provenance::sampled;
    std::sscanf(line.c_str(), "# provenance: sampled seed=%" SCNu64 " count_requested=%d",
                &ps.seed, &ps.count_requested);
  } else if (line == "# provenance: enumerated") {
    ps.provenance = Provenance::enumerated;
  } else if (line == "# provenance: paired") {
    ps.provenance = Provenance::paired;
  } else if (line == "# provenance: explicit") {
    ps.provenance = Provenance::explicit_set;
  } else {
    throw std::runtime_error("pattern file missing provenance header: " + path);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Pattern p;
    p.mask.reserve(line.size());
    for (char ch : line) {
      if (ch != '0' && ch != '1') throw std::runtime_error("malformed pattern line: " + path);
      p.mask.push_back(ch == '1' ? 1 : 0);
    }
    if (!ps.patterns.empty() && p.size() != ps.patterns.front().size())
      throw std::runtime_error("inconsistent pattern lengths: " + path);
    ps.patterns.push_back(std::move(p));
  }
  return ps;
}

std::string gated_solution_to_json(const GatedSolution& sol, const PatternSet& ps) {
  json j;
  j["patterns"] = masks_json(ps);
  json w = json::array();
  for (const auto& wi : sol.weights) w.push_back(std::vector<double>(wi.data(), wi.data() + wi.size()));
  j["weights"] = w;
  j["objective"] = sol.objective;
  j["kkt_residual"] = sol.kkt_residual;
  j["iterations"] = sol.iterations;
  j["dual_vector"] = std::vector<double>(sol.dual_vector.data(),
                                         sol.dual_vector.data() + sol.dual_vector.size());
  j["certified"] = sol.certified;
  return j.dump(2);
}

std::string cone_solution_to_json(const ConeSolution& sol, const PatternSet& ps) {
  json j;
  j["patterns"] = masks_json(ps);
  json pairs = json::array();
  for (const auto& [u, v] : sol.pairs) {
    json pr;
    pr["u"] = std::vector<double>(u.data(), u.data() + u.size());
    pr["v"] = std::vector<double>(v.data(), v.data() + v.size());
    pairs.push_back(pr);
  }
  j["pairs"] = pairs;
  j["objective"] = sol.objective;
  j["kkt_residual"] = sol.kkt_residual;
  j["cone_violation"] = sol.cone_violation;
  j["cone_scale"] = sol.cone_scale;
  j["iterations"] = sol.iterations;
  j["certified"] = sol.certified;
  return j.dump(2);
}

void save_trace_csv(const TrainTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "step,loss,drift_so_far\n";
  std::size_t snap = 0;
  for (std::size_t s = 0; s < trace.losses.size(); ++s) {
    out << s << "," << fmt(trace.losses[s]) << ",";
    if (snap < trace.snapshot_steps.size() &&
        trace.snapshot_steps[snap] == static_cast<int>(s)) {
      const MaskMatrix& a = trace.pattern_snapshots.front();
      const MaskMatrix& b = trace.pattern_snapshots[snap];
      long changed = 0;
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
          if (a(i, j) != b(i, j)) ++changed;
      out << fmt(static_cast<double>(changed) / static_cast<double>(a.size()));
      ++snap;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void save_network(const NetworkParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << p.width() << "," << p.U.rows() << "\n";
  for (Eigen::Index j = 0; j < p.width(); ++j) {
    for (Eigen::Index i = 0; i < p.U.rows(); ++i) out << (i ? "," : "") << fmt(p.U(i, j));
    out << "\n";
  }
  for (Eigen::Index j = 0; j < p.width(); ++j) out << (j ? "," : "") << fmt(p.alpha(j));
  out << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

NetworkParams load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty network file: " + path);
  const auto header = split_csv(line);
  if (header.size() != 2) throw std::runtime_error("malformed network header: " + path);
  const int m = static_cast<int>(parse_double(header[0], "m"));
  const int d = static_cast<int>(parse_double(header[1], "d"));
  if (m < 0 || d < 1) throw std::runtime_error("bad network dimensions: " + path);
  NetworkParams p;
  p.U.resize(d, m);
  for (int j = 0; j < m; ++j) {
    if (!std::getline(in, line)) throw std::runtime_error("network file truncated: " + path);
    const auto row = split_csv(line);
    if (static_cast<int>(row.size()) != d)
      throw std::runtime_error("network row has wrong length: " + path);
    for (int i = 0; i < d; ++i) p.U(i, j) = parse_double(row[i], "weight");
  }
  if (!std::getline(in, line)) throw std::runtime_error("network file missing outer weights: " + path);
  const auto alphas = split_csv(line);
  if (static_cast<int>(alphas.size()) != m)
    throw std::runtime_error("network outer weight line has wrong length: " + path);
  p.alpha.resize(m);
  for (int j = 0; j < m; ++j) p.alpha(j) = parse_double(alphas[j], "outer weight");
  return p;
}

}  // namespace relucvx
