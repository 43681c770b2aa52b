#pragma once

#include <vector>

#include "ebuf/eh_model.hpp"

namespace ebuf {

// Finite-buffer limiting distribution: a density on (0, K) given in stripes
// of width M plus an atom pi(K) at the full-buffer level.
struct StripeDist {
  Policy policy = Policy::BestEffort;
  int m = 1;
  double lambda = 0.0;
  double M = 0.0;
  double K = 0.0;
  int l = 0;           // K = l*M + Delta (exact l for BE; see approx_l for OO)
  double Delta = 0.0;
  bool approx_l = false;  // on-off with K not an exact multiple of M
  std::vector<double> alpha;
  // Low halves of alpha: the coefficients can reach ~1e13 while the density
  // is O(1), so the evaluation rebuilds them in extended precision from the
  // hi/lo pair. Empty means zero corrections.
  std::vector<double> alpha_lo;
  double atom = 0.0;   // pi(K)

  // Density at x in [0, K); the atom is queried separately.
  double pdf(double x) const;

  // Stripe index n such that x lies in [K-(n+1)M, K-nM); boundaries resolve
  // to the upper (right) stripe.
  int stripe_index(double x) const;
};

StripeDist be_finite_solve(const GammaEHModel& eh, double M, double K);

// K must equal l*M with integer l >= 3 unless approx_l is set, in which case
// l = round(K/M) is used in the summation limits and the exact K elsewhere.
StripeDist oo_finite_solve(const GammaEHModel& eh, double M, double K,
                           bool approx_l = false);

struct FiniteResidual {
  double pdf = 0.0;   // max |g(x) - RHS(x)| over the grid
  double atom = 0.0;  // |pi(K) - atom equation RHS|
};

FiniteResidual integral_residual_finite(const StripeDist& dist,
                                        const GammaEHModel& eh,
                                        const std::vector<double>& grid);

}  // namespace ebuf
