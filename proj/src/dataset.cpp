#include "relucvx/dataset.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "relucvx/rng.hpp"

namespace relucvx {

namespace {

Eigen::VectorXd load_labels(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label file: " + path);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    if (!(in >> y(i))) throw std::runtime_error("label file too short: " + path);
  }
  double extra;
  if (in >> extra) throw std::runtime_error("label file has more than n entries: " + path);
  return y;
}

}  // namespace

Dataset generate_dataset(int n, int d, double beta, LabelMode mode, std::uint64_t seed,
                         const std::string& label_file, int planted_width,
                         PlantedTeacher* teacher_out) {
  if (n < 1 || d < 1) throw std::invalid_argument("generate_dataset: n and d must be >= 1");
  if (beta < 0.0) throw std::invalid_argument("generate_dataset: beta must be nonnegative");

  Rng root(seed);
  Rng xr = root.split(1);
  Dataset ds;
  ds.beta = beta;
  ds.X.resize(n, d);
  for (int i = 0; i < n; ++i) {
    // A zero row has an ill-defined activation indicator; resample it.
    do {
      for (int j = 0; j < d; ++j) ds.X(i, j) = xr.normal();
    } while (ds.X.row(i).norm() == 0.0);
  }

  switch (mode) {
    case LabelMode::random_gaussian: {
      Rng yr = root.split(2);
      ds.y = yr.normal_vector(n);
      break;
    }
    case LabelMode::planted_network: {
      if (planted_width < 1)
        throw std::invalid_argument("generate_dataset: planted_width must be >= 1");
      Rng tr = root.split(3);
      PlantedTeacher teacher;
      teacher.U = tr.normal_matrix(d, planted_width);
      teacher.alpha = tr.normal_vector(planted_width);
      ds.y = (ds.X * teacher.U).cwiseMax(0.0) * teacher.alpha;
      if (teacher_out) *teacher_out = teacher;
      break;
    }
    case LabelMode::file: {
      ds.y = load_labels(label_file, n);
      break;
    }
  }
  return ds;
}

}  // namespace relucvx
