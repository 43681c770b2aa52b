#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ebuf/errors.hpp"
#include "ebuf/linalg.hpp"

using namespace ebuf;

TEST_CASE("identity and hand-solvable systems") {
  CplxMatrix id(2, 2);
  id(0, 0) = 1.0;
  id(1, 1) = 1.0;
  auto x = solve_linear(id, {Cplx(1.0), Cplx(1.0)});
  CHECK(std::abs(x[0] - 1.0) < 1e-14);
  CHECK(std::abs(x[1] - 1.0) < 1e-14);

  CplxMatrix a(2, 2);
  a(0, 0) = 1.0;
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;
  a(1, 1) = -1.0;
  x = solve_linear(a, {Cplx(2.0), Cplx(0.0)});
  CHECK(std::abs(x[0] - 1.0) < 1e-14);
  CHECK(std::abs(x[1] - 1.0) < 1e-14);
}

TEST_CASE("random well-conditioned round trips") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    CplxMatrix a(n, n);
    for (auto& e : a.entries) e = Cplx(u(rng), u(rng));
    for (int i = 0; i < n; ++i) a(i, i) += 4.0;  // keep it well conditioned
    std::vector<Cplx> want(n);
    for (auto& w : want) w = Cplx(u(rng), u(rng));
    const auto b = mat_vec(a, want);
    const auto got = solve_linear(a, b);
    double err = 0.0, scale = 0.0;
    for (int i = 0; i < n; ++i) {
      err = std::max(err, std::abs(got[i] - want[i]));
      scale = std::max(scale, std::abs(want[i]));
    }
    CHECK(err <= 1e-10 * (1.0 + scale));
    // Residual check: A x reproduces b.
    const auto back = mat_vec(a, got);
    double res = 0.0, bn = 0.0;
    for (int i = 0; i < n; ++i) {
      res = std::max(res, std::abs(back[i] - b[i]));
      bn = std::max(bn, std::abs(b[i]));
    }
    CHECK(res <= 1e-10 * bn);
  }
}

TEST_CASE("singular and ill-conditioned matrices are rejected") {
  CplxMatrix s(2, 2);
  s(0, 0) = 1.0;
  s(0, 1) = 2.0;
  s(1, 0) = 2.0;
  s(1, 1) = 4.0;
  CHECK_THROWS_AS(solve_linear(s, {Cplx(1.0), Cplx(1.0)}), singular_error);

  CplxMatrix ill(2, 2);
  ill(0, 0) = 1.0;
  ill(0, 1) = 1.0;
  ill(1, 0) = 1.0;
  ill(1, 1) = 1.0 + 1e-14;
  try {
    solve_linear(ill, {Cplx(1.0), Cplx(1.0)});
    CHECK(false);
  } catch (const singular_error& e) {
    CHECK(e.cond > 1e12);
  }
}

TEST_CASE("shape validation") {
  CplxMatrix rect(2, 3);
  CHECK_THROWS_AS(solve_linear(rect, {Cplx(1.0), Cplx(1.0)}), config_error);
  CplxMatrix sq(2, 2);
  sq(0, 0) = 1.0;
  sq(1, 1) = 1.0;
  CHECK_THROWS_AS(solve_linear(sq, {Cplx(1.0)}), config_error);
}
