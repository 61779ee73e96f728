#include <doctest.h>

#include <cmath>

#include "relucvx/dataset.hpp"
#include "relucvx/experiments.hpp"
#include "relucvx/network.hpp"
#include "relucvx/rng.hpp"

using namespace relucvx;

TEST_CASE("init variance is 1/m within 5 standard errors, seeded determinism") {
  const int m = 200, d = 100;
  const NetworkParams p = init_network(m, d, 3);
  const double N = static_cast<double>(m * d + m);
  double sum = p.U.sum() + p.alpha.sum();
  double sumsq = p.U.squaredNorm() + p.alpha.squaredNorm();
  const double mean = sum / N;
  const double var = sumsq / N - mean * mean;
  const double target = 1.0 / m;
  CHECK(std::abs(var - target) < 5.0 * target * std::sqrt(2.0 / N));

  const NetworkParams q = init_network(m, d, 3);
  CHECK(p.U == q.U);
  CHECK(p.alpha == q.alpha);
}

TEST_CASE("width floor arithmetic") {
  // 320 (sqrt(4)+1)^2 log(100/0.1) = 320 * 9 * log(1000)
  CHECK(width_floor(4.0, 100, 0.1) ==
        static_cast<long>(std::ceil(320.0 * 9.0 * std::log(1000.0))));
}

TEST_CASE("loss of the zero network is ||y||^2/2; planted teacher fits exactly") {
  Dataset ds = generate_dataset(6, 3, 0.0, LabelMode::random_gaussian, 5);
  NetworkParams zero;
  zero.U = Eigen::MatrixXd::Zero(3, 4);
  zero.alpha = Eigen::VectorXd::Zero(4);
  CHECK(network_loss(ds, zero) == doctest::Approx(0.5 * ds.y.squaredNorm()).epsilon(1e-14));

  PlantedTeacher teacher;
  const Dataset planted =
      generate_dataset(6, 3, 0.0, LabelMode::planted_network, 6, {}, 2, &teacher);
  NetworkParams tp;
  tp.U = teacher.U;
  tp.alpha = teacher.alpha;
  CHECK(network_loss(planted, tp) <= 1e-20);
}

TEST_CASE("network gradient matches central differences away from kinks") {
  const Dataset ds = generate_dataset(5, 3, 0.3, LabelMode::random_gaussian, 7);
  NetworkParams p = init_network(4, 3, 8);
  // Nudge pre-activations away from zero to stay in the smooth region.
  p.U.array() += 0.05;

  TrainOptions opt;
  opt.lr = 0.0;  // no step; we only want the internal gradient
  opt.steps = 1;
  opt.snapshot_every = 0;

  // Finite differences against network_loss directly.
  const double h = 1e-6;
  // Recompute the analytic gradient the way the trainer does.
  const Eigen::MatrixXd Z = ds.X * p.U;
  const Eigen::MatrixXd act = Z.cwiseMax(0.0);
  const Eigen::VectorXd r = act * p.alpha - ds.y;
  const Eigen::MatrixXd gate = (Z.array() > 0.0).cast<double>();
  const Eigen::MatrixXd gU =
      ds.X.transpose() * (gate.array() * (r * p.alpha.transpose()).array()).matrix() +
      ds.beta * p.U;
  const Eigen::VectorXd galpha = act.transpose() * r + ds.beta * p.alpha;

  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 3; ++i) {
      NetworkParams pp = p, pm = p;
      pp.U(i, j) += h;
      pm.U(i, j) -= h;
      const double fd = (network_loss(ds, pp) - network_loss(ds, pm)) / (2.0 * h);
      CHECK(std::abs(fd - gU(i, j)) <= 1e-5 * std::max(1.0, std::abs(gU(i, j))));
    }
    NetworkParams pp = p, pm = p;
    pp.alpha(j) += h;
    pm.alpha(j) -= h;
    const double fd = (network_loss(ds, pp) - network_loss(ds, pm)) / (2.0 * h);
    CHECK(std::abs(fd - galpha(j)) <= 1e-5 * std::max(1.0, std::abs(galpha(j))));
  }
}

TEST_CASE("training on zero labels decays monotonically toward zero loss") {
  Dataset ds = generate_dataset(6, 3, 0.1, LabelMode::random_gaussian, 9);
  ds.y.setZero();
  const NetworkParams p0 = init_network(8, 3, 10);
  TrainOptions opt;
  opt.steps = 400;
  opt.snapshot_every = 100;
  const TrainResult res = train_gd(ds, p0, opt);
  for (std::size_t s = 1; s < res.trace.losses.size(); ++s)
    CHECK(res.trace.losses[s] <= res.trace.losses[s - 1] + 1e-12);
  CHECK(res.trace.losses.back() < 1e-3 * res.trace.losses.front());
}

TEST_CASE("backtracking losses are nonincreasing on generic data") {
  const Dataset ds = generate_dataset(10, 4, 0.05, LabelMode::random_gaussian, 11);
  const NetworkParams p0 = init_network(12, 4, 12);
  TrainOptions opt;
  opt.steps = 300;
  opt.snapshot_every = 50;
  const TrainResult res = train_gd(ds, p0, opt);
  for (std::size_t s = 1; s < res.trace.losses.size(); ++s)
    CHECK(res.trace.losses[s] <= res.trace.losses[s - 1] + 1e-12);
}

TEST_CASE("single neuron in one dimension reaches the closed-form stationary point") {
  // x = 1, y = 1, one neuron: loss = 1/2 (u a - 1)^2 + beta/2 (u^2 + a^2) on
  // the active branch. Stationarity: u a = a^2 = u^2 shared scale s = u a,
  // with s (s^2... ) reduced to the scalar equation s^3... Solve numerically
  // here by minimizing the 1-D restriction u = a = t.
  Dataset ds;
  ds.X.resize(1, 1);
  ds.X << 1.0;
  ds.y.resize(1);
  ds.y << 1.0;
  ds.beta = 0.1;

  NetworkParams p0;
  p0.U.resize(1, 1);
  p0.U << 0.8;
  p0.alpha.resize(1);
  p0.alpha << 0.9;
  TrainOptions opt;
  opt.steps = 8000;
  opt.snapshot_every = 0;
  const TrainResult res = train_gd(ds, p0, opt);
  REQUIRE(res.status == TrainStatus::converged);

  // Balanced stationary point on the active branch: u = a = t with
  // t (t^2 - 1) + beta t = 0 -> t = sqrt(1 - beta).
  const double t = std::sqrt(1.0 - ds.beta);
  const double loss_expected = 0.5 * (t * t - 1.0) * (t * t - 1.0) + ds.beta * t * t;
  CHECK(network_loss(ds, res.params) == doctest::Approx(loss_expected).epsilon(1e-6));
}

TEST_CASE("fixed-step divergence is detected and flagged") {
  const Dataset ds = generate_dataset(8, 3, 0.0, LabelMode::random_gaussian, 13);
  const NetworkParams p0 = init_network(6, 3, 14);
  TrainOptions opt;
  opt.lr = 50.0;  // way above the stable step
  opt.steps = 200;
  opt.snapshot_every = 0;
  const TrainResult res = train_gd(ds, p0, opt);
  CHECK(res.status == TrainStatus::diverged);
}

TEST_CASE("pattern drift: too few snapshots, zero steps, and hand arithmetic") {
  TrainTrace t;
  t.pattern_snapshots.push_back(MaskMatrix::Zero(3, 2));
  CHECK_THROWS(pattern_drift(t));

  // Zero steps: two identical snapshots, drift 0.
  const Dataset ds = generate_dataset(5, 2, 0.0, LabelMode::random_gaussian, 15);
  const NetworkParams p0 = init_network(3, 2, 16);
  TrainOptions opt;
  opt.lr = 0.0;
  opt.steps = 1;
  opt.snapshot_every = 1;
  const TrainResult res = train_gd(ds, p0, opt);
  CHECK(pattern_drift(res.trace) == 0.0);

  // Flipping one neuron's column of an m=2, n=3 snapshot changes 3 bits of 6.
  TrainTrace manual;
  MaskMatrix a = MaskMatrix::Zero(3, 2);
  MaskMatrix b = a;
  b(0, 1) = 1;
  manual.pattern_snapshots.push_back(a);
  manual.pattern_snapshots.push_back(b);
  CHECK(pattern_drift(manual) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("solution mapping: empty network and a single hand-built block") {
  Dataset ds = generate_dataset(4, 2, 0.2, LabelMode::random_gaussian, 17);
  const PatternSet ps = sample_patterns(ds, 2, 18);

  // All-zero solution maps to the empty network.
  ConeSolution zero;
  zero.pairs.assign(static_cast<std::size_t>(ps.size()),
                    {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)});
  zero.cone_violation = 0.0;
  zero.cone_scale = 0.0;
  const NetworkParams empty = convex_to_network(zero, ps);
  CHECK(empty.width() == 0);
  CHECK(network_loss(ds, empty) == doctest::Approx(0.5 * ds.y.squaredNorm()));

  // Single block with u in its own cone (a gate direction realizing the
  // pattern), v = 0: one neuron, exact identity.
  Rng rng(19);
  const Eigen::VectorXd g = rng.normal_vector(2);
  PatternSet one;
  one.patterns.push_back(pattern_of(ds.X, g));
  ConeSolution single;
  single.pairs.push_back({g, Eigen::VectorXd::Zero(2)});
  single.cone_violation = 0.0;
  single.cone_scale = (ds.X * g).cwiseAbs().maxCoeff();
  const NetworkParams net = convex_to_network(single, one);
  REQUIRE(net.width() == 1);
  CHECK(network_loss(ds, net) == doctest::Approx(cone_objective(ds, one, single.pairs))
                                     .epsilon(1e-12));
}

TEST_CASE("solution mapping identity and balancedness on a certified solve") {
  Dataset ds = generate_dataset(4, 2, 0.15, LabelMode::random_gaussian, 19);
  const PatternSet ps = sample_patterns(ds, 2, 20);
  SolverConfig cfg;
  cfg.tol_kkt = 1e-9;
  cfg.max_iters = 300000;
  const ConeSolution sol = solve_cone_constrained(ds, ps, cfg);
  REQUIRE(sol.certified);
  const NetworkParams net = convex_to_network(sol, ps);
  const double loss = network_loss(ds, net);
  CHECK(std::abs(loss - sol.objective) <= 1e-8 * std::max(1.0, std::abs(sol.objective)));
  for (Eigen::Index j = 0; j < net.width(); ++j)
    CHECK(net.U.col(j).norm() == doctest::Approx(std::abs(net.alpha(j))).epsilon(1e-12));
}

TEST_CASE("solution mapping refuses infeasible cone solutions") {
  Dataset ds = generate_dataset(4, 2, 0.15, LabelMode::random_gaussian, 21);
  const PatternSet ps = sample_patterns(ds, 2, 22);
  ConeSolution bad;
  bad.pairs.assign(static_cast<std::size_t>(ps.size()),
                   {Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(2)});
  bad.cone_violation = 1.0;
  bad.cone_scale = 1.0;
  CHECK_THROWS(convex_to_network(bad, ps));
}

TEST_CASE("network_to_convex_patterns deduplicates and respects sign flips") {
  const Dataset ds = generate_dataset(5, 2, 0.0, LabelMode::random_gaussian, 23);
  NetworkParams p;
  p.U.resize(2, 3);
  Rng rng(24);
  const Eigen::VectorXd u = rng.normal_vector(2);
  p.U.col(0) = u;
  p.U.col(1) = u;       // duplicate neuron
  p.U.col(2) = -u;      // complementary pattern generically
  p.alpha = Eigen::VectorXd::Ones(3);
  const PatternSet ps = network_to_convex_patterns(p, ds);
  CHECK(ps.size() == 2);
  int agree = 0;
  for (Eigen::Index i = 0; i < 5; ++i)
    if (ps.patterns[0].active(i) != ps.patterns[1].active(i)) ++agree;
  CHECK(agree == 5);  // exact complements when no pre-activation is zero
}

TEST_CASE("stationary point of GD maps into a convex problem with no higher loss") {
  const Dataset ds = generate_dataset(6, 2, 0.1, LabelMode::random_gaussian, 25);
  const NetworkParams p0 = init_network(30, 2, 26);
  TrainOptions opt;
  opt.steps = 6000;
  opt.snapshot_every = 500;
  const TrainResult res = train_gd(ds, p0, opt);
  const PatternSet induced = network_to_convex_patterns(res.params, ds);
  SolverConfig cfg;
  cfg.tol_kkt = 1e-9;
  cfg.max_iters = 300000;
  const ConeSolution convex = solve_cone_constrained(ds, induced, cfg);
  const double gd_loss = network_loss(ds, res.params);
  CHECK(convex.objective <= gd_loss + 1e-6 * std::max(1.0, gd_loss));
}
