#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relucvx/rng.hpp"

using relucvx::Rng;

TEST_CASE("same seed gives identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42), dd(43);
  bool differ = false;
  for (int i = 0; i < 10; ++i) differ = differ || (c.next_u64() != dd.next_u64());
  CHECK(differ);
}

TEST_CASE("normal moments within 5 standard errors") {
  Rng r(7);
  const int N = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = r.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / N;
  const double var = sumsq / N - mean * mean;
  CHECK(std::abs(mean) < 5.0 / std::sqrt(static_cast<double>(N)));
  CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / N));
}

TEST_CASE("split streams are independent of consumption and of each other") {
  Rng a(99);
  const Rng child_before = a.split(1);
  for (int i = 0; i < 57; ++i) a.next_u64();
  Rng child_after = a.split(1);
  Rng cb = child_before;
  CHECK(cb.next_u64() == child_after.next_u64());

  Rng c1 = a.split(1), c2 = a.split(2);
  CHECK(c1.next_u64() != c2.next_u64());
}
