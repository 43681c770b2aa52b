#pragma once

#include <vector>

#include "ebuf/eh_model.hpp"
#include "ebuf/linalg.hpp"

namespace ebuf {

// Roots of (lambda/(lambda-lambda_n))^m e^{-lambda_n M} = 1 obtained from the
// principal Lambert W branch. roots are in the caller's units; roots_norm are
// lambda_n / lambda (dimensionless).
struct RootSet {
  int m = 0;
  double lambda = 0.0;
  double M = 0.0;
  double delta = 0.0;  // lambda*M/m
  std::vector<Cplx> roots;
  std::vector<Cplx> roots_norm;
};

RootSet lambda_roots(int m, double lambda, double M);

// Per-(n,k) constants of the on-off low segment.
struct OnOffLowSegment {
  std::vector<double> eta;          // 2*pi*k/m
  std::vector<Cplx> theta;          // normalized theta_k = 1 - e^{j eta_k}
  std::vector<std::vector<Cplx>> a;  // a[n][k], normalized (units of 1/lambda)
  std::vector<std::vector<Cplx>> b;  // b[n][k]
};

// Limiting distribution for an infinite buffer: exponential mixture tail,
// plus (on-off only) a distinct closed form on [0, M).
class ExpMixtureDist {
 public:
  Policy policy = Policy::BestEffort;
  RootSet roots;
  std::vector<Cplx> coeffs;  // c_n, dimensionless
  double M = 0.0;

  // Populated for the on-off policy only.
  OnOffLowSegment low;

  // True when the roots are numerically confluent at lambda (very large
  // delta); the distribution then collapses to the harvest distribution.
  bool gamma_limit = false;

  // Relative residual of the coefficient system actually solved:
  // max_s |sum_n A(s,n) c_n - 1| / (sum_n |A(s,n) c_n| + 1).
  double solve_residual = 0.0;

  double pdf(double x) const;
  double cdf(double x) const;  // on-off low segment integrates the pdf
};

ExpMixtureDist be_infinite_solve(const GammaEHModel& eh, double M);
ExpMixtureDist oo_infinite_solve(const GammaEHModel& eh, double M);

// Max |g(x) - RHS(x)| of the stationarity integral equation over the grid.
double integral_residual_infinite(const ExpMixtureDist& dist,
                                  const GammaEHModel& eh,
                                  const std::vector<double>& grid);

// Max |G(x) - integral_0^x G(x-u+M) f(u) du| over the grid (best-effort).
double lindley_cdf_residual(const ExpMixtureDist& dist,
                            const GammaEHModel& eh,
                            const std::vector<double>& grid);

}  // namespace ebuf
