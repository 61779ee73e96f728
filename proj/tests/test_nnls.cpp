#include <doctest.h>

#include <Eigen/Dense>

#include "relucvx/nnls.hpp"
#include "relucvx/rng.hpp"

using namespace relucvx;

TEST_CASE("nnls matches unconstrained least squares when the solution is positive") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd C = rng.normal_matrix(8, 3);
    Eigen::VectorXd x_true(3);
    x_true << 1.0 + rng.uniform01(), 0.5 + rng.uniform01(), 2.0;
    const Eigen::VectorXd e = C * x_true;
    const NnlsResult r = nnls(C, e);
    CHECK(r.converged);
    CHECK((r.x - x_true).norm() < 1e-9);
  }
}

TEST_CASE("nnls satisfies its own optimality conditions") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd C = rng.normal_matrix(6, 10);
    const Eigen::VectorXd e = rng.normal_vector(6);
    const NnlsResult r = nnls(C, e);
    CHECK(r.converged);
    CHECK((r.x.array() >= 0.0).all());
    const Eigen::VectorXd w = C.transpose() * (e - C * r.x);
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      if (r.x(j) > 0.0)
        CHECK(std::abs(w(j)) < 1e-8);  // active: gradient zero
      else
        CHECK(w(j) < 1e-8);  // inactive: no descent direction
    }
  }
}

TEST_CASE("ldp detects feasibility and returns the minimum-norm point") {
  // {x : x1 >= 1, x2 >= 1} has minimum-norm point (1, 1).
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd h = Eigen::VectorXd::Ones(2);
  const LdpResult r = ldp(G, h);
  REQUIRE(r.feasible);
  CHECK((r.x - Eigen::Vector2d(1, 1)).norm() < 1e-9);

  // x1 >= 1 and -x1 >= 1 is infeasible.
  Eigen::MatrixXd G2(2, 1);
  G2 << 1, -1;
  CHECK(!ldp(G2, h).feasible);

  // h <= 0 is satisfied by zero.
  const LdpResult r3 = ldp(G2, Eigen::Vector2d(-1, -2));
  REQUIRE(r3.feasible);
  CHECK(r3.x.norm() == 0.0);
}

TEST_CASE("ldp agrees with a dense grid search on random planar problems") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd G = rng.normal_matrix(4, 2);
    const Eigen::VectorXd h = rng.normal_vector(4);
    const LdpResult r = ldp(G, h);
    // Grid scan over a box for the best feasible norm.
    double best = std::numeric_limits<double>::infinity();
    const int K = 400;
    for (int a = -K; a <= K; ++a)
      for (int b = -K; b <= K; ++b) {
        const Eigen::Vector2d x(a * 0.02, b * 0.02);
        if (((G * x - h).array() >= -1e-12).all()) best = std::min(best, x.norm());
      }
    if (r.feasible) {
      CHECK(((G * r.x - h).array() >= -1e-8).all());
      if (std::isfinite(best)) CHECK(r.x.norm() <= best + 0.05);
    } else {
      CHECK(!std::isfinite(best));
    }
  }
}

TEST_CASE("planar sector projection agrees with the generic polyhedral path") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 1 + static_cast<int>(rng.uniform01() * 5);
    const Eigen::MatrixXd B = rng.normal_matrix(rows, 2);
    const Eigen::VectorXd z = 3.0 * rng.normal_vector(2);
    const Eigen::VectorXd fast = project_cone(z, B);
    const Eigen::VectorXd slow = project_polyhedron(z, B, Eigen::VectorXd::Zero(rows));
    CHECK((fast - slow).norm() <= 1e-9 * (1.0 + z.norm()));
  }
}

TEST_CASE("polyhedron projection is idempotent and nonexpansive") {
  Rng rng(4);
  const Eigen::MatrixXd B = rng.normal_matrix(5, 3);
  const Eigen::VectorXd h = Eigen::VectorXd::Zero(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::VectorXd z1 = 3.0 * rng.normal_vector(3);
    const Eigen::VectorXd z2 = 3.0 * rng.normal_vector(3);
    const Eigen::VectorXd p1 = project_cone(z1, B);
    const Eigen::VectorXd p2 = project_cone(z2, B);
    CHECK(((B * p1).array() >= -1e-9).all());
    CHECK((project_cone(p1, B) - p1).norm() < 1e-9);
    CHECK((p1 - p2).norm() <= (z1 - z2).norm() + 1e-9);
    // Optimality of the projection: moving toward z must leave the set.
    const Eigen::VectorXd mid = p1 + 1e-3 * (z1 - p1);
    if ((z1 - p1).norm() > 1e-9) CHECK(!((B * mid).array() >= 0.0).all());
  }
}
