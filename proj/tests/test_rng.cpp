#include <doctest.h>

#include <cmath>
#include <vector>

#include "coalmatch/rng.hpp"

using namespace coalmatch;

TEST_SUITE_BEGIN("rng");

TEST_CASE("same key reproduces the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("counter access is order independent") {
  Rng rng(7);
  double late = rng.uniform_at(900);
  double early = rng.uniform_at(3);
  Rng again(7);
  CHECK(again.uniform_at(3) == early);
  CHECK(again.uniform_at(900) == late);
}

TEST_CASE("substreams differ from each other and the parent") {
  Rng parent(1234);
  Rng s0 = parent.split(0);
  Rng s1 = parent.split(1);
  CHECK(s0.key() != s1.key());
  CHECK(s0.at(0) != s1.at(0));
}

TEST_CASE("uniform stays in the unit interval") {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal draws have roughly standard moments") {
  Rng rng(99);
  const int n = 40000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("lognormal matches exp of normal parameters") {
  Rng rng(17);
  const int n = 60000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::log(rng.lognormal(2.0, 1.0));
  CHECK(std::abs(sum / n - 2.0) < 0.02);
}

TEST_SUITE_END();
