#include <doctest.h>

#include <cmath>

#include "coalmatch/errors.hpp"
#include "coalmatch/rng.hpp"
#include "coalmatch/simplex.hpp"

using namespace coalmatch;

TEST_SUITE_BEGIN("simplex");

namespace {

BoundedLp make_dense(std::initializer_list<std::initializer_list<double>> rows,
                     std::initializer_list<double> c, std::initializer_list<double> u,
                     std::initializer_list<double> b) {
  int m = static_cast<int>(rows.size());
  int n = static_cast<int>(c.size());
  Eigen::MatrixXd A(m, n);
  int r = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (double v : row) A(r, j++) = v;
    ++r;
  }
  Eigen::VectorXd cc(n), uu(n), bb(m);
  int k = 0;
  for (double v : c) cc(k++) = v;
  k = 0;
  for (double v : u) uu(k++) = v;
  k = 0;
  for (double v : b) bb(k++) = v;
  return BoundedLp::dense(std::move(A), std::move(cc), std::move(uu), std::move(bb));
}

}  // namespace

TEST_CASE("single equality knapsack picks the best column") {
  // max 3a + 2b + c  s.t. a + b + c = 1, 0 <= vars <= 1
  BoundedLp lp = make_dense({{1, 1, 1}}, {3, 2, 1}, {1, 1, 1}, {1});
  SimplexResult res = simplex_maximize(lp);
  CHECK(res.objective == doctest::Approx(3.0));
  CHECK(res.x(0) == doctest::Approx(1.0));
}

TEST_CASE("upper bounds force splitting mass") {
  // max 3a + 2b + c  s.t. a + b + c = 2, 0 <= vars <= 1
  BoundedLp lp = make_dense({{1, 1, 1}}, {3, 2, 1}, {1, 1, 1}, {2});
  SimplexResult res = simplex_maximize(lp);
  CHECK(res.objective == doctest::Approx(5.0));
  CHECK(res.x(0) == doctest::Approx(1.0));
  CHECK(res.x(1) == doctest::Approx(1.0));
}

TEST_CASE("two-row transportation toy") {
  // max 5x11 + 4x12 + 3x21 + 6x22
  // s.t. x11 + x12 = 1 (source 1), x21 + x22 = 1 (source 2), all in [0,1]
  BoundedLp lp = make_dense({{1, 1, 0, 0}, {0, 0, 1, 1}}, {5, 4, 3, 6}, {1, 1, 1, 1}, {1, 1});
  SimplexResult res = simplex_maximize(lp);
  CHECK(res.objective == doctest::Approx(11.0));
}

TEST_CASE("negative objective leaves everything at lower bounds when possible") {
  // max -x - y s.t. x - y = 0, bounds [0,1]: optimum x = y = 0
  BoundedLp lp = make_dense({{1, -1}}, {-1, -1}, {1, 1}, {0});
  SimplexResult res = simplex_maximize(lp);
  CHECK(res.objective == doctest::Approx(0.0));
}

TEST_CASE("infeasible rhs is reported") {
  // x + y = 5 with x, y <= 1 cannot hold
  BoundedLp lp = make_dense({{1, 1}}, {1, 1}, {1, 1}, {5});
  CHECK_THROWS_AS(simplex_maximize(lp), Error);
}

TEST_CASE("matches exhaustive vertex search on random bounded problems") {
  // Random m x n programs with m = 2; compare against brute force over all
  // choices of basic pairs and bound patterns (vertex enumeration).
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 5, m = 2;
    Eigen::MatrixXd A(m, n);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) A(r, c) = std::round(rng.uniform(-2.0, 2.0));
    Eigen::VectorXd cvec(n), u(n);
    for (int c = 0; c < n; ++c) {
      cvec(c) = rng.uniform(-3.0, 3.0);
      u(c) = rng.uniform(0.5, 2.0);
    }

    // rhs from a random feasible interior-ish point so the program is feasible
    Eigen::VectorXd x0(n);
    for (int c = 0; c < n; ++c) x0(c) = rng.uniform(0.0, 1.0) * u(c);
    Eigen::VectorXd b = A * x0;

    BoundedLp lp = BoundedLp::dense(A, cvec, u, b);
    SimplexResult res = simplex_maximize(lp);

    // brute force: enumerate basic sets (pairs of columns) x bound patterns
    double best = -1e300;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        for (int pattern = 0; pattern < (1 << n); ++pattern) {
          Eigen::VectorXd x(n);
          for (int c = 0; c < n; ++c) x(c) = (pattern >> c & 1) ? u(c) : 0.0;
          Eigen::MatrixXd B(m, 2);
          B.col(0) = A.col(i);
          B.col(1) = A.col(j);
          if (std::abs(B.determinant()) < 1e-9) continue;
          Eigen::VectorXd rhs = b;
          for (int c = 0; c < n; ++c)
            if (c != i && c != j) rhs -= A.col(c) * x(c);
          Eigen::Vector2d xb = B.fullPivLu().solve(rhs);
          x(i) = xb(0);
          x(j) = xb(1);
          if (x(i) < -1e-9 || x(i) > u(i) + 1e-9) continue;
          if (x(j) < -1e-9 || x(j) > u(j) + 1e-9) continue;
          best = std::max(best, cvec.dot(x));
        }
      }
    // also the all-nonbasic candidates (no basic pair feasible configurations)
    for (int pattern = 0; pattern < (1 << n); ++pattern) {
      Eigen::VectorXd x(n);
      for (int c = 0; c < n; ++c) x(c) = (pattern >> c & 1) ? u(c) : 0.0;
      if ((A * x - b).cwiseAbs().maxCoeff() < 1e-9) best = std::max(best, cvec.dot(x));
    }

    REQUIRE(best > -1e299);
    CHECK(res.objective == doctest::Approx(best).epsilon(1e-7));
  }
}

TEST_CASE("sparse and dense storage agree") {
  Rng rng(71);
  const int n = 6, m = 2;
  Eigen::MatrixXd A(m, n);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) A(r, c) = std::round(rng.uniform(-1.0, 2.0));
  Eigen::VectorXd cvec(n), u = Eigen::VectorXd::Ones(n);
  for (int c = 0; c < n; ++c) cvec(c) = rng.uniform(-1.0, 3.0);
  Eigen::VectorXd x0(n);
  for (int c = 0; c < n; ++c) x0(c) = rng.uniform(0.0, 1.0);
  Eigen::VectorXd b = A * x0;

  std::vector<BoundedLp::SparseColumn> cols(n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < m; ++r)
      if (A(r, c) != 0.0) cols[c].emplace_back(r, A(r, c));

  SimplexResult dense = simplex_maximize(BoundedLp::dense(A, cvec, u, b));
  SimplexResult sparse = simplex_maximize(BoundedLp::sparse(m, cols, cvec, u, b));
  CHECK(dense.objective == doctest::Approx(sparse.objective).epsilon(1e-10));
}

TEST_SUITE_END();
