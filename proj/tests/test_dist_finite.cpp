#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ebuf/dist_finite.hpp"
#include "ebuf/dist_infinite.hpp"
#include "ebuf/errors.hpp"
#include "ebuf/quadrature.hpp"

using namespace ebuf;

namespace {

double total_mass(const StripeDist& d) {
  // Integrate stripe by stripe so the quadrature never straddles a seam.
  double mass = d.atom;
  std::vector<double> cuts;
  cuts.push_back(0.0);
  for (double c = d.Delta > 0.0 ? d.Delta : d.M; c < d.K - 1e-12 * d.K;
       c += d.M)
    cuts.push_back(c);
  cuts.push_back(d.K);
  for (size_t i = 0; i + 1 < cuts.size(); ++i)
    mass += integrate([&](double x) { return d.pdf(x); }, cuts[i],
                      cuts[i + 1] * (1.0 - 1e-14), 1e-13, 1e-11);
  return mass;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = a + (b - a) * i / (n - 1);
  return g;
}

}  // namespace

TEST_CASE("unit area across the (m, l, Delta) matrix, best-effort") {
  for (int m : {1, 2, 3}) {
    for (int l : {2, 4}) {
      for (double frac : {0.0, 0.3}) {
        GammaEHModel eh(m, 1.0);
        const double M = 1.2;
        const double K = l * M + frac * M;
        const auto d = be_finite_solve(eh, M, K);
        CHECK(d.l == l);
        CHECK(d.Delta == doctest::Approx(frac * M).epsilon(1e-9));
        CHECK(total_mass(d) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(d.atom > 0.0);
        CHECK(d.atom < 1.0);
      }
    }
  }
}

TEST_CASE("unit area, on-off") {
  for (int m : {1, 2, 3, 4}) {
    for (int l : {3, 4, 6}) {
      GammaEHModel eh(m, 1.0);
      const double M = 1.1;
      const auto d = oo_finite_solve(eh, M, l * M);
      CHECK(total_mass(d) == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(d.atom > 0.0);
      CHECK(d.atom < 1.0);
    }
  }
}

TEST_CASE("best-effort m=4 l=6 unit area (acceptance matrix corner)") {
  GammaEHModel eh(4, 1.0);
  const auto d = be_finite_solve(eh, 1.04, 6 * 1.04);
  CHECK(total_mass(d) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("atom reproduction and positivity of the density") {
  GammaEHModel eh(2, 1.0);
  const auto d = be_finite_solve(eh, 1.04, 4.5 * 1.04);
  double s = 0.0;
  double f = 1.0;
  for (int r = 0; r < d.m; ++r) {
    s += d.alpha[r] / f;
    f *= (r + 1);
  }
  CHECK(d.atom == doctest::Approx(std::exp(-eh.rate * d.K) * s).epsilon(1e-12));
  for (double x : linspace(0.0, d.K * 0.999999, 500))
    CHECK(d.pdf(x) >= -1e-9);
}

TEST_CASE("on-off atom exceeds best-effort atom at the reference setup") {
  // m=2, delta=1.04, K = 0.05 mJ, mean harvested 1.2e-5 J.
  GammaEHModel eh(2, 1.2e-5);
  const double M = 1.04 * 1.2e-5;
  const double K = 0.05e-3;
  const auto be = be_finite_solve(eh, M, K);
  const auto oo = oo_finite_solve(eh, M, K, /*approx_l=*/true);
  CHECK(oo.atom > be.atom);
  CHECK(total_mass(be) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("stripe boundary continuity for best-effort") {
  GammaEHModel eh(2, 1.0);
  const auto d = be_finite_solve(eh, 1.3, 4 * 1.3 + 0.4);
  for (int n = 0; n < d.l; ++n) {
    const double seam = d.K - (n + 1) * d.M;
    if (seam <= 0.0) break;
    const double left = d.pdf(seam * (1.0 - 1e-9));
    const double right = d.pdf(seam * (1.0 + 1e-12));
    CHECK(left == doctest::Approx(right).epsilon(1e-7));
  }
}

TEST_CASE("on-off upper stripes use the best-effort stripe formula") {
  GammaEHModel eh(2, 1.0);
  const double M = 1.2;
  const auto oo = oo_finite_solve(eh, M, 4 * M);
  auto be = be_finite_solve(eh, M, 4 * M);
  // Substituting the on-off alpha into the best-effort evaluator must
  // reproduce the on-off density for x > M (same closed form).
  be.alpha = oo.alpha;
  be.alpha_lo = oo.alpha_lo;
  be.atom = oo.atom;
  for (double x : linspace(M * 1.0001, 4 * M * 0.9999, 200))
    CHECK(oo.pdf(x) == doctest::Approx(be.pdf(x)).epsilon(1e-12));
}

TEST_CASE("configuration validation") {
  GammaEHModel eh(2, 1.0);
  CHECK_THROWS_AS(oo_finite_solve(eh, 1.0, 2.0), config_error);       // l < 3
  CHECK_THROWS_AS(oo_finite_solve(eh, 1.0, 3.5), config_error);       // not lM
  CHECK_NOTHROW(oo_finite_solve(eh, 1.0, 3.5, /*approx_l=*/true));
  CHECK_THROWS_AS(be_finite_solve(eh, 1.0, 0.5), config_error);       // K < M
  CHECK_THROWS_AS(be_finite_solve(eh, 0.05, 100.0), config_error);    // l*m big
  const auto d = be_finite_solve(eh, 1.0, 3.0);
  CHECK_THROWS_AS(d.pdf(-0.1), config_error);
  CHECK_THROWS_AS(d.pdf(3.0), config_error);
}

TEST_CASE("integral equation residuals, best-effort m=1 l=3") {
  GammaEHModel eh(1, 1.0);
  const auto d = be_finite_solve(eh, 1.4, 3 * 1.4);
  auto grid = linspace(0.01, d.K * 0.9999, 50);
  double maxg = 0.0;
  for (double x : grid) maxg = std::max(maxg, d.pdf(x));
  const auto res = integral_residual_finite(d, eh, grid);
  CHECK(res.pdf <= 1e-6 * maxg);
  CHECK(res.atom <= 1e-8);
}

TEST_CASE("integral equation residuals, on-off m=2 l=3") {
  GammaEHModel eh(2, 1.0);
  const auto d = oo_finite_solve(eh, 1.3, 3 * 1.3);
  auto grid = linspace(0.01, d.K * 0.9999, 50);
  double maxg = 0.0;
  for (double x : grid) maxg = std::max(maxg, d.pdf(x));
  const auto res = integral_residual_finite(d, eh, grid);
  CHECK(res.pdf <= 1e-6 * maxg);
  CHECK(res.atom <= 1e-8);
}

TEST_CASE("finite to infinite consistency at l=20") {
  // delta = 1.2, m = 2: the large finite buffer approaches the infinite one.
  GammaEHModel eh(2, 1.0);
  const double M = 1.2;
  const auto fin_be = be_finite_solve(eh, M, 20 * M);
  const auto inf_be = be_infinite_solve(eh, M);
  const auto fin_oo = oo_finite_solve(eh, M, 20 * M);
  const auto inf_oo = oo_infinite_solve(eh, M);
  double gap_be = 0.0, gap_oo = 0.0;
  for (double x : linspace(0.0, 10 * M, 400)) {
    gap_be = std::max(gap_be, std::abs(fin_be.pdf(x) - inf_be.pdf(x)));
    gap_oo = std::max(gap_oo, std::abs(fin_oo.pdf(x) - inf_oo.pdf(x)));
  }
  CHECK(gap_be <= 1e-3);
  CHECK(gap_oo <= 1e-3);
  CHECK(fin_be.atom <= 1e-4);
  CHECK(fin_oo.atom <= 1e-4);
}

TEST_CASE("scale invariance at SI magnitudes") {
  GammaEHModel a(2, 1.2e-5), b(2, 1.2);
  const auto da = be_finite_solve(a, 1.04 * 1.2e-5, 4 * 1.04 * 1.2e-5);
  const auto db = be_finite_solve(b, 1.04 * 1.2, 4 * 1.04 * 1.2);
  CHECK(da.atom == doctest::Approx(db.atom).epsilon(1e-10));
  CHECK(da.pdf(1.2e-5) * 1.2e-5 ==
        doctest::Approx(db.pdf(1.2) * 1.2).epsilon(1e-10));
}
