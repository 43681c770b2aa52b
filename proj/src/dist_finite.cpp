#include "ebuf/dist_finite.hpp"

#include <quadmath.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "ebuf/errors.hpp"
#include "ebuf/quadrature.hpp"

namespace ebuf {

namespace {

// Everything below works in normalized units lambda = 1 (M_hat = lambda*M,
// K_hat = lambda*K); the density transforms as g(x) = lambda * g_hat(lambda x)
// and alpha, pi(K) are dimensionless. This keeps the lambda^{(l+1)m} powers of
// the stripe formulas out of floating-point range trouble for SI-scale rates.
//
// The stripe sums cancel across up to ~20 decimal digits for large l*m (the
// individual terms grow roughly like e^{K_hat} while the density is O(1)), so
// the whole assembly runs in quad precision.

using Real = __float128;

Real q_exp(Real x) { return expq(x); }
Real q_abs(Real x) { return fabsq(x); }

constexpr int kMaxFact = 512;

Real fact_q(int k) {
  static const auto table = [] {
    std::vector<Real> t(kMaxFact + 1);
    t[0] = 1;
    for (int i = 1; i <= kMaxFact; ++i) t[i] = t[i - 1] * i;
    return t;
  }();
  return table[k];
}

// x^p with the 0^0 = 1 convention used by the polynomial sums; p may be
// negative.
Real pow0(Real x, int p) {
  if (p == 0) return 1;
  const bool inv = p < 0;
  unsigned e = inv ? static_cast<unsigned>(-p) : static_cast<unsigned>(p);
  Real b = x, r = 1;
  while (e) {
    if (e & 1u) r *= b;
    b *= b;
    e >>= 1u;
  }
  return inv ? Real(1) / r : r;
}

struct Ctx {
  int m;
  int l;
  Real mh;  // M_hat
  Real kh;  // K_hat
};

Real binom(int n, int k) { return fact_q(n) / (fact_q(k) * fact_q(n - k)); }

// Regularized lower incomplete gamma P(n, x) = e^{-x} sum_{k>=n} x^k / k!,
// summed with positive terms only.
Real gamma_p_tail(int n, Real x) {
  if (x <= 0) return n == 0 ? Real(1) : Real(0);
  Real term = q_exp(-x);
  for (int k = 1; k <= n; ++k) term *= x / k;
  Real acc = 0;
  for (int k = n; k < n + 100000; ++k) {
    acc += term;
    term *= x / (k + 1);
    if (term < acc * Real(1e-36) && k > n + 3) break;
  }
  return acc;
}

// Best-effort stripe polynomial (also the upper stripes of on-off):
// bracket of the stripe formula for stripe n at normalized x.
Real be_stripe_norm(const Ctx& c, const std::vector<Real>& alpha, int n,
                    Real x) {
  Real sum = 0;
  for (int r = 0; r < c.m; ++r) {
    Real inner = 0;
    for (int q = 0; q <= n; ++q) {
      const Real base = q * c.mh + x - c.kh;
      const int p = (q + 1) * c.m - r - 1;
      inner += q_exp(-c.mh * q) * pow0(base, p) / fact_q(p);
      if (q >= 1) {
        const int p2 = q * c.m - 1;
        inner -= q_exp(-c.mh * q) * pow0(base, p2) / fact_q(p2);
      }
    }
    sum += alpha[r] / fact_q(r) * inner;
  }
  return q_exp(-x) * sum;
}

// C(x,t) / (m+t)! of the on-off low segment.  The spectral form (an average
// over the m-th roots of unity) keeps every m-th term of the exponential
// series, so it reduces to the lacunary series sum_j x^{m+t+jm} / (m+t+jm)!
// with positive terms only.
Real c_hat(int m, int t, Real x) {
  if (x <= 0) return 0;
  int n = m + t;
  Real term = pow0(x, n) / fact_q(n);
  Real acc = 0;
  while (true) {
    acc += term;
    if (n + m > kMaxFact) break;
    Real f = pow0(x, m);
    for (int q = n + 1; q <= n + m; ++q) f /= q;
    term *= f;
    n += m;
    if (term < acc * Real(1e-36)) break;
  }
  return acc;
}

// On-off low-segment density bracket (stripe l-1), normalized.
Real oo_low_norm(const Ctx& c, const std::vector<Real>& alpha, Real x) {
  Real sum = 0;
  for (int r = 0; r < c.m; ++r) {
    Real inner = 0;
    for (int q = 0; q <= c.l - 2; ++q) {
      const Real base = (q + 1) * c.mh - c.kh;
      const Real eq = q_exp(-c.mh * (q + 1));
      const int p1 = (q + 1) * c.m - r - 1;
      for (int t = 0; t <= p1; ++t)
        inner += eq * pow0(base, p1 - t) / fact_q(p1 - t) * c_hat(c.m, t, x);
      if (q >= 1) {
        const int p2 = q * c.m - 1;
        for (int t = 0; t <= p2; ++t)
          inner -= eq * pow0(base, p2 - t) / fact_q(p2 - t) * c_hat(c.m, t, x);
      }
    }
    sum += alpha[r] / fact_q(r) * inner;
  }
  return q_exp(-x) * sum;
}

// Best-effort coefficient matrix entry (normalized).
Real be_asr(const Ctx& c, int s, int r) {
  const Real ks = pow0(c.kh, s);
  Real first = 0;
  for (int q = 0; q <= c.l; ++q) {
    const Real base = q * c.mh - c.kh;
    Real tsum = 0;
    for (int t = q * c.m; t <= (q + 1) * c.m - r - 1; ++t)
      tsum += pow0(base, t) / fact_q(t);
    first += q_exp(-c.mh * q) * tsum;
  }
  Real second = 0;
  for (int q = 0; q <= c.l - 1; ++q) {
    const Real base = (q + 1) * c.mh - c.kh;
    Real tsum = 0;
    for (int t = q * c.m; t <= (q + 1) * c.m - r - 1; ++t)
      tsum += pow0(base, t) / fact_q(t);
    second += q_exp(-c.mh * (q + 1)) * tsum;
  }
  Real third = 0;
  for (int t = 0; t <= s; ++t) {
    Real qsum = 0;
    for (int q = 0; q <= c.l - 1; ++q) {
      const Real base = (q + 1) * c.mh - c.kh;
      const int p1 = (q + 1) * c.m - r + t;
      const int p2 = q * c.m + t;
      qsum += q_exp(-c.mh * (q + 1)) *
              (pow0(base, p1) / fact_q(p1) - pow0(base, p2) / fact_q(p2));
    }
    third += binom(s, t) * pow0(c.kh, -t) * fact_q(t) * qsum;
  }
  return ((Real(1) - ks) * first + ks * second + ks * third) / fact_q(r);
}

// H(t) of the on-off system (normalized).  Like C(x,t), the spectral form
// reduces to a lacunary series: H(t) = sum_j P(m+t+jm+1, M_hat).
Real oo_h(const Ctx& c, int t) {
  Real acc = 0;
  for (int n = c.m + t; n + 1 <= kMaxFact; n += c.m) {
    const Real v = gamma_p_tail(n + 1, c.mh);
    acc += v;
    if (v < acc * Real(1e-36)) break;
  }
  return acc;
}

// F(t,s) of the on-off system (normalized):
// sum_b C(s,b) (K-M)^{s-b} b! sum_j M^{m+t+jm+b+1} / (m+t+jm+b+1)!.
Real oo_f(const Ctx& c, int t, int s) {
  Real total = 0;
  for (int b = 0; b <= s; ++b) {
    Real jsum = 0;
    for (int n = c.m + t; n + b + 1 <= kMaxFact; n += c.m) {
      const Real v = pow0(c.mh, n + b + 1) / fact_q(n + b + 1);
      jsum += v;
      if (v < jsum * Real(1e-36)) break;
    }
    total += binom(s, b) * pow0(c.kh - c.mh, s - b) * fact_q(b) * jsum;
  }
  return total;
}

// On-off coefficient matrix entry (normalized).
Real oo_asr(const Ctx& c, int s, int r, const std::vector<Real>& h_table,
            const std::vector<Real>& f_table) {
  const int m = c.m;
  // H(t) - lambda^s F(t,s); lambda^s = 1 in normalized units.
  auto hf = [&](int t) { return h_table[t] - f_table[t]; };
  Real first = 0;
  for (int q = 0; q <= c.l - 2; ++q) {
    const Real base = (q + 1) * c.mh - c.kh;
    const Real eq = q_exp(-c.mh * (q + 1));
    const int p1 = (q + 1) * m - r - 1;
    for (int t = 0; t <= p1; ++t)
      first += eq * pow0(base, p1 - t) / fact_q(p1 - t) * hf(t);
    if (q >= 1) {
      const int p2 = q * m - 1;
      for (int t = 0; t <= p2; ++t)
        first -= eq * pow0(base, p2 - t) / fact_q(p2 - t) * hf(t);
    }
  }
  Real third = 0;
  for (int q = 0; q <= c.l - 2; ++q) {
    const Real base = (q + 1) * c.mh - c.kh;
    Real tsum = 0;
    for (int t = q * m; t <= (q + 1) * m - r - 1; ++t)
      tsum += pow0(base, t) / fact_q(t);
    third += q_exp(-c.mh * (q + 1)) * tsum;
  }
  Real fourth = 0;
  for (int q = 0; q <= c.l - 2; ++q) {
    const Real base = (q + 1) * c.mh - c.kh;
    Real tsum = 0;
    for (int t = 0; t <= s; ++t) {
      const int p1 = (q + 1) * m - r + t;
      const int p2 = q * m + t;
      tsum += binom(s, t) * pow0(c.kh, -t) * fact_q(t) *
              (pow0(base, p1) / fact_q(p1) - pow0(base, p2) / fact_q(p2));
    }
    fourth += q_exp(-c.mh * (q + 1)) * tsum;
  }
  fourth *= pow0(c.kh, s);
  return (first + third + fourth) / fact_q(r);
}

// Dedicated extended-precision solve for (I + A) alpha = 1.  The entries of A
// can be large and of mixed sign, so a generic double-precision condition
// gate rejects systems that are still perfectly solvable; instead we factor
// in quad precision and verify the residual directly.  The solution is
// returned as a hi/lo pair of doubles so the density evaluation can rebuild
// it without rounding (alpha itself can reach ~1e13).
void solve_alpha(int m, const std::function<Real(int, int)>& asr,
                 std::vector<double>& hi, std::vector<double>& lo) {
  std::vector<std::vector<Real>> a(m, std::vector<Real>(m));
  Real scale = 1;
  for (int s = 0; s < m; ++s)
    for (int r = 0; r < m; ++r) {
      a[s][r] = asr(s, r);
      if (s == r) a[s][r] += 1;
      scale = std::max(scale, q_abs(a[s][r]));
    }
  const auto a0 = a;
  std::vector<Real> x(m, Real(1));
  for (int k = 0; k < m; ++k) {
    int piv = k;
    for (int i = k + 1; i < m; ++i)
      if (q_abs(a[i][k]) > q_abs(a[piv][k])) piv = i;
    if (a[piv][k] == 0)
      throw singular_error("solve_alpha: singular stripe system",
                           std::numeric_limits<double>::infinity());
    std::swap(a[k], a[piv]);
    std::swap(x[k], x[piv]);
    for (int i = k + 1; i < m; ++i) {
      const Real f = a[i][k] / a[k][k];
      a[i][k] = 0;
      for (int j = k + 1; j < m; ++j) a[i][j] -= f * a[k][j];
      x[i] -= f * x[k];
    }
  }
  for (int i = m - 1; i >= 0; --i) {
    for (int j = i + 1; j < m; ++j) x[i] -= a[i][j] * x[j];
    x[i] /= a[i][i];
  }
  Real resid = 0, xmax = 0;
  for (int s = 0; s < m; ++s) {
    Real row = -1;
    for (int r = 0; r < m; ++r) row += a0[s][r] * x[r];
    resid = std::max(resid, q_abs(row));
  }
  for (int r = 0; r < m; ++r) xmax = std::max(xmax, q_abs(x[r]));
  if (!(resid <= Real(1e-20) * scale * std::max(xmax, Real(1))))
    throw numeric_error(
        "solve_alpha: stripe system residual too large; the requested "
        "(m, l) point is numerically out of reach");
  hi.resize(m);
  lo.resize(m);
  for (int r = 0; r < m; ++r) {
    hi[r] = static_cast<double>(x[r]);
    lo[r] = static_cast<double>(x[r] - Real(hi[r]));
  }
}

std::vector<Real> rebuild_alpha(const std::vector<double>& hi,
                                const std::vector<double>& lo) {
  std::vector<Real> a(hi.size());
  for (size_t r = 0; r < hi.size(); ++r) {
    a[r] = Real(hi[r]);
    if (r < lo.size()) a[r] += Real(lo[r]);
  }
  return a;
}

double compute_atom(int m, Real kh, const std::vector<Real>& alpha) {
  Real s = 0;
  for (int r = 0; r < m; ++r) s += alpha[r] / fact_q(r);
  return static_cast<double>(q_exp(-kh) * s);
}

void check_budget(int l, int m, double kh) {
  if (l * m > 120)
    throw config_error(
        "finite-buffer solve: l*m exceeds the supported cancellation budget "
        "(120); treat the buffer as infinite instead");
  // The alpha system loses roughly e^{lambda*K} of the 1e-34 working
  // precision to cancellation; past ~55 the solved density is unusable.
  if (kh > 55.0)
    throw numeric_error(
        "finite-buffer solve: lambda*K exceeds the supported cancellation "
        "budget (55); treat the buffer as infinite instead");
}

}  // namespace

int StripeDist::stripe_index(double x) const {
  const double v = (K - x) / M;
  // Boundaries resolve to the upper (right) stripe: ceil(v)-1.
  int n = static_cast<int>(std::ceil(v)) - 1;
  const double frac = v - std::floor(v);
  if (frac > 1e-12 && frac < 1.0 - 1e-12) n = static_cast<int>(std::floor(v));
  const int max_n = (policy == Policy::BestEffort)
                        ? ((Delta == 0.0) ? l - 1 : l)
                        : l - 1;
  if (n < 0) n = 0;
  if (n > max_n) n = max_n;
  return n;
}

double StripeDist::pdf(double x) const {
  if (x < 0.0 || x >= K)
    throw config_error("StripeDist::pdf: x outside [0, K)");
  const Ctx c{m, l, Real(lambda) * Real(M), Real(lambda) * Real(K)};
  const Real xh = Real(lambda) * Real(x);
  const auto aq = rebuild_alpha(alpha, alpha_lo);
  Real v;
  if (policy == Policy::OnOff && x < M) {
    v = oo_low_norm(c, aq, xh);
  } else {
    int n = stripe_index(x);
    if (policy == Policy::OnOff) n = std::min(n, l - 2);
    v = be_stripe_norm(c, aq, n, xh);
  }
  return lambda * static_cast<double>(v);
}

StripeDist be_finite_solve(const GammaEHModel& eh, double M, double K) {
  if (!(M > 0.0) || !(K > M))
    throw config_error("be_finite_solve: need 0 < M < K");
  StripeDist d;
  d.policy = Policy::BestEffort;
  d.m = eh.m;
  d.lambda = eh.rate;
  d.M = M;
  d.K = K;
  int l = static_cast<int>(std::floor(K / M));
  double delta = K - l * M;
  if (delta >= M * (1.0 - 1e-12)) {
    ++l;
    delta = 0.0;
  }
  if (delta < M * 1e-12) delta = 0.0;
  d.l = l;
  d.Delta = delta;
  check_budget(l, eh.m, eh.rate * K);
  const Ctx c{eh.m, l, Real(eh.rate) * Real(M), Real(eh.rate) * Real(K)};
  solve_alpha(eh.m, [&](int s, int r) { return be_asr(c, s, r); }, d.alpha,
              d.alpha_lo);
  d.atom = compute_atom(eh.m, c.kh, rebuild_alpha(d.alpha, d.alpha_lo));
  return d;
}

StripeDist oo_finite_solve(const GammaEHModel& eh, double M, double K,
                           bool approx_l) {
  if (!(M > 0.0) || !(K > M))
    throw config_error("oo_finite_solve: need 0 < M < K");
  StripeDist d;
  d.policy = Policy::OnOff;
  d.m = eh.m;
  d.lambda = eh.rate;
  d.M = M;
  d.K = K;
  d.approx_l = approx_l;
  const double ratio = K / M;
  const int l = static_cast<int>(std::lround(ratio));
  if (!approx_l && std::abs(ratio - l) > 1e-9)
    throw config_error(
        "oo_finite_solve: K must be an integer multiple of M (or pass "
        "approx_l)");
  if (l < 3)
    throw config_error("oo_finite_solve: requires l = K/M >= 3");
  d.l = l;
  d.Delta = 0.0;
  check_budget(l, eh.m, eh.rate * K);
  const Ctx c{eh.m, l, Real(eh.rate) * Real(M), Real(eh.rate) * Real(K)};
  // H(t) and F(t,s) tables: t ranges up to (l-1)m - 1.
  const int tmax = (l - 1) * eh.m;
  std::vector<std::vector<Real>> f_tables(eh.m, std::vector<Real>(tmax));
  std::vector<Real> h_table(tmax);
  for (int t = 0; t < tmax; ++t) {
    h_table[t] = oo_h(c, t);
    for (int s = 0; s < eh.m; ++s) f_tables[s][t] = oo_f(c, t, s);
  }
  solve_alpha(eh.m,
              [&](int s, int r) { return oo_asr(c, s, r, h_table,
                                                f_tables[s]); },
              d.alpha, d.alpha_lo);
  d.atom = compute_atom(eh.m, c.kh, rebuild_alpha(d.alpha, d.alpha_lo));
  return d;
}

FiniteResidual integral_residual_finite(const StripeDist& dist,
                                        const GammaEHModel& eh,
                                        const std::vector<double>& grid) {
  const double M = dist.M;
  const double K = dist.K;
  auto g = [&](double u) { return dist.pdf(u); };
  // The stationary density has kinks (and, for m = 1, a jump) at the stripe
  // seams K - nM; split every integral there so the quadrature only ever sees
  // smooth pieces.
  auto seam_integrate = [&](const std::function<double(double)>& f, double a,
                            double b) {
    std::vector<double> cuts{a};
    for (int n = 1; n <= dist.l + 1; ++n) {
      const double s = K - n * M;
      if (s > a + 1e-13 * K && s < b - 1e-13 * K) cuts.push_back(s);
    }
    if (M > a + 1e-13 * K && M < b - 1e-13 * K) cuts.push_back(M);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i)
      total += integrate(f, cuts[i], cuts[i + 1], 1e-13, 1e-11);
    return total;
  };
  const double low_mass = seam_integrate(g, 0.0, M);
  FiniteResidual res;
  for (double x : grid) {
    if (x < 0.0 || x >= K)
      throw config_error("integral_residual_finite: grid point outside [0,K)");
    double rhs = 0.0;
    if (dist.policy == Policy::BestEffort) {
      if (x < K - M) {
        rhs = harvest_pdf(eh, x) * low_mass +
              seam_integrate([&](double u) { return harvest_pdf(eh, x - u + M) *
                                               g(u); },
                        M, M + x);
      } else {
        rhs = harvest_pdf(eh, x) * low_mass +
              seam_integrate([&](double u) { return harvest_pdf(eh, x - u + M) *
                                               g(u); },
                        M, K) +
              dist.atom * harvest_pdf(eh, x - K + M);
      }
    } else {
      if (x < M) {
        rhs = seam_integrate([&](double u) { return harvest_pdf(eh, x - u) *
                                               g(u); },
                        0.0, x) +
              seam_integrate([&](double u) { return harvest_pdf(eh, x - u + M) *
                                               g(u); },
                        M, M + x);
      } else if (x < K - M) {
        rhs = seam_integrate([&](double u) { return harvest_pdf(eh, x - u) *
                                               g(u); },
                        0.0, M) +
              seam_integrate([&](double u) { return harvest_pdf(eh, x - u + M) *
                                               g(u); },
                        M, M + x);
      } else {
        rhs = seam_integrate([&](double u) { return harvest_pdf(eh, x - u) *
                                               g(u); },
                        0.0, M) +
              seam_integrate([&](double u) { return harvest_pdf(eh, x - u + M) *
                                               g(u); },
                        M, K) +
              dist.atom * harvest_pdf(eh, x - K + M);
      }
    }
    res.pdf = std::max(res.pdf, std::abs(dist.pdf(x) - rhs));
  }
  // Atom equation.
  double atom_rhs;
  if (dist.policy == Policy::BestEffort) {
    atom_rhs = (harvest_ccdf(eh, K) * low_mass +
                seam_integrate([&](double u) { return harvest_ccdf(eh, K - u + M) *
                                                 g(u); },
                          M, K)) /
               (1.0 - harvest_ccdf(eh, M));
  } else {
    atom_rhs = (seam_integrate([&](double u) { return harvest_ccdf(eh, K - u) *
                                                 g(u); },
                          0.0, M) +
                seam_integrate([&](double u) { return harvest_ccdf(eh, K - u + M) *
                                                 g(u); },
                          M, K)) /
               (1.0 - harvest_ccdf(eh, M));
  }
  res.atom = std::abs(dist.atom - atom_rhs);
  return res;
}

}  // namespace ebuf
