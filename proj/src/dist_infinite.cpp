#include "ebuf/dist_infinite.hpp"

#include <quadmath.h>

#include <cmath>
#include <numbers>

#include "ebuf/errors.hpp"
#include "ebuf/quadrature.hpp"
#include "ebuf/special.hpp"

namespace ebuf {

using special::exp_gamma_ratio;
using special::factorial;
using special::lambert_w0;
using special::lower_inc_gamma_int;

namespace {

// All internal computations use normalized units lambda = 1, M_hat = m*delta.
// The distributions transform exactly as g_lambda(x) = lambda * g_1(lambda*x),
// which avoids overflow of lambda^k powers for SI-scale rate parameters.

Cplx ipow(Cplx z, int p) {
  Cplx r = 1.0;
  for (int i = 0; i < p; ++i) r *= z;
  return r;
}

double realify(Cplx v, double scale) {
  if (std::abs(v.imag()) > 1e-9 * (scale + std::abs(v.real())))
    throw numeric_error("distribution value has non-negligible imaginary part");
  return v.real();
}

OnOffLowSegment make_low_segment(const RootSet& rs) {
  const int m = rs.m;
  OnOffLowSegment low;
  low.eta.resize(m);
  low.theta.resize(m);
  low.a.assign(m, std::vector<Cplx>(m));
  low.b.assign(m, std::vector<Cplx>(m));
  for (int k = 0; k < m; ++k) {
    low.eta[k] = 2.0 * std::numbers::pi * k / m;
    const Cplx ejk = std::polar(1.0, low.eta[k]);
    low.theta[k] = (k == 0) ? Cplx(0.0) : 1.0 - ejk;
  }
  for (int n = 0; n < m; ++n) {
    const Cplx nu = rs.roots_norm[n];
    for (int k = 0; k < m; ++k) {
      const Cplx ejk = std::polar(1.0, low.eta[k]);
      low.a[n][k] = 1.0 / (2.0 * (nu / ejk + std::conj(low.theta[k])));
      low.b[n][k] = 1.0 / (2.0 * (nu * ejk + low.theta[k]));
    }
  }
  return low;
}

// On-off low-segment pdf, normalized units, 0 <= x < M_hat.
Cplx oo_low_pdf_norm(const ExpMixtureDist& d, double x) {
  const int m = d.roots.m;
  const double mh = d.roots.M * d.roots.lambda;  // M_hat
  (void)mh;
  Cplx total = 0.0;
  for (int n = 0; n < m; ++n) {
    const Cplx nu = d.roots.roots_norm[n];
    const Cplx enx = std::exp(-nu * x);
    Cplx bracket = enx;
    for (int k = 0; k < m; ++k) {
      const Cplx a = d.low.a[n][k];
      const Cplx b = d.low.b[n][k];
      bracket += (a * std::exp(-d.low.theta[k] * x) +
                  b * std::exp(-std::conj(d.low.theta[k]) * x) -
                  (a + b) * enx) /
                 static_cast<double>(m);
    }
    Cplx pow1mn = 1.0;  // (1-nu)^t
    for (int t = 0; t < m; ++t) {
      double ksum = 0.0;
      for (int k = 0; k < m; ++k) {
        const Cplx ejk = std::polar(1.0, d.low.eta[k]);
        // e^{-j eta_k t} * e^{z} gamma(t+1, z) with z = x e^{j eta_k};
        // e^{z} gamma(t+1, z) = t! * exp_gamma_ratio(t+1, z).
        const Cplx val = ipow(1.0 / ejk, t) * factorial(t) *
                         exp_gamma_ratio(t + 1, x * ejk);
        ksum += val.real();
      }
      bracket -= pow1mn / factorial(t) * std::exp(-x) *
                 (std::pow(x, t) + ksum / m);
      pow1mn *= (1.0 - nu);
    }
    total += nu * d.coeffs[n] * bracket;
  }
  return total;
}

Cplx tail_pdf_norm(const ExpMixtureDist& d, double x) {
  Cplx total = 0.0;
  for (size_t n = 0; n < d.coeffs.size(); ++n) {
    const Cplx nu = d.roots.roots_norm[n];
    total += nu * d.coeffs[n] * std::exp(-nu * x);
  }
  return total;
}

}  // namespace

RootSet lambda_roots(int m, double lambda, double M) {
  if (m < 1) throw config_error("lambda_roots: m must be >= 1");
  if (!(lambda > 0.0 && M > 0.0))
    throw config_error("lambda_roots: lambda, M must be > 0");
  RootSet rs;
  rs.m = m;
  rs.lambda = lambda;
  rs.M = M;
  rs.delta = lambda * M / m;
  if (!(rs.delta > 1.0))
    throw regime_error(
        "lambda_roots: delta <= 1, no stationary distribution exists");
  rs.roots_norm.resize(m);
  rs.roots.resize(m);
  const double d = rs.delta;
  const double mag = d * std::exp(-d);
  for (int n = 0; n < m; ++n) {
    if (2 * n > m) {
      // Mirror the lower half so conjugate pairs (n, m-n) are exact.
      rs.roots_norm[n] = std::conj(rs.roots_norm[m - n]);
      rs.roots[n] = lambda * rs.roots_norm[n];
      continue;
    }
    Cplx arg;
    if (n == 0)
      arg = Cplx(-mag, 0.0);  // exactly real for real lambda_0
    else if (2 * n == m)
      arg = Cplx(mag, 0.0);   // phase -pi lands on the positive real axis
    else
      arg = -mag * std::polar(1.0, -2.0 * std::numbers::pi * n / m);
    Cplx nu = 1.0 + lambert_w0(arg) / d;
    if (n == 0 || 2 * n == m) nu.imag(0.0);  // real roots stay exactly real
    rs.roots_norm[n] = nu;
    rs.roots[n] = lambda * nu;
  }
  return rs;
}

double ExpMixtureDist::pdf(double x) const {
  if (x < 0.0) throw config_error("pdf: x must be >= 0");
  if (gamma_limit)
    return harvest_pdf(GammaEHModel(roots.m, roots.m / roots.lambda), x);
  const double lam = roots.lambda;
  const double xn = lam * x;
  const double mh = lam * M;
  Cplx v;
  if (policy == Policy::OnOff && xn < mh)
    v = oo_low_pdf_norm(*this, xn);
  else
    v = tail_pdf_norm(*this, xn);
  double scale = 0.0;
  for (size_t n = 0; n < coeffs.size(); ++n)
    scale += std::abs(roots.roots_norm[n] * coeffs[n]);
  return lam * realify(v, scale);
}

double ExpMixtureDist::cdf(double x) const {
  if (x < 0.0) throw config_error("cdf: x must be >= 0");
  if (gamma_limit)
    return 1.0 - harvest_ccdf(GammaEHModel(roots.m, roots.m / roots.lambda), x);
  const double lam = roots.lambda;
  const double xn = lam * x;
  const double mh = lam * M;
  auto tail_cdf = [&](double t) {
    Cplx s = 0.0;
    for (size_t n = 0; n < coeffs.size(); ++n)
      s += coeffs[n] * std::exp(-roots.roots_norm[n] * t);
    return 1.0 - realify(s, 1.0);
  };
  if (policy == Policy::BestEffort) return tail_cdf(xn);
  if (xn >= mh) return tail_cdf(xn);
  const double mass = integrate(
      [&](double u) { return realify(oo_low_pdf_norm(*this, u), 1.0); }, 0.0,
      xn, 1e-12, 1e-11);
  return mass;
}

namespace {

// Minimal complex __float128 arithmetic: the coefficient systems become very
// ill-conditioned when the roots cluster (large delta), so both the solve and
// the reported residual run in quad precision.
struct QC {
  __float128 re = 0;
  __float128 im = 0;
};
QC operator+(QC a, QC b) { return {a.re + b.re, a.im + b.im}; }
QC operator-(QC a, QC b) { return {a.re - b.re, a.im - b.im}; }
QC operator*(QC a, QC b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
QC operator/(QC a, QC b) {
  const __float128 d = b.re * b.re + b.im * b.im;
  return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}
__float128 q_norm1(QC a) { return fabsq(a.re) + fabsq(a.im); }
QC q_of(Cplx c) { return {c.real(), c.imag()}; }
Cplx q_to(QC c) {
  return {static_cast<double>(c.re), static_cast<double>(c.im)};
}

// Relative residual max_s |sum_n a(s,n) c_n - 1| / (sum_n |a(s,n) c_n| + 1).
double coeff_residual(const CplxMatrix& a, const std::vector<Cplx>& c) {
  double worst = 0.0;
  for (int s = 0; s < a.rows; ++s) {
    QC acc{};
    __float128 scale = 1;
    for (int n = 0; n < a.cols; ++n) {
      const QC t = q_of(a(s, n)) * q_of(c[n]);
      acc = acc + t;
      scale += q_norm1(t);
    }
    acc.re -= 1;
    worst = std::max(worst, static_cast<double>(q_norm1(acc) / scale));
  }
  return worst;
}

// Quad-precision LU with partial pivoting; no condition gate — callers rely
// on the residual instead.
std::vector<Cplx> solve_quad(const CplxMatrix& a0, int m) {
  std::vector<QC> a(m * m);
  std::vector<QC> b(m, QC{1, 0});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a[i * m + j] = q_of(a0(i, j));
  for (int k = 0; k < m; ++k) {
    int piv = k;
    for (int i = k + 1; i < m; ++i)
      if (q_norm1(a[i * m + k]) > q_norm1(a[piv * m + k])) piv = i;
    if (q_norm1(a[piv * m + k]) == 0)
      throw numeric_error("coefficient system is exactly singular");
    if (piv != k) {
      for (int j = 0; j < m; ++j) std::swap(a[k * m + j], a[piv * m + j]);
      std::swap(b[k], b[piv]);
    }
    for (int i = k + 1; i < m; ++i) {
      const QC f = a[i * m + k] / a[k * m + k];
      for (int j = k; j < m; ++j)
        a[i * m + j] = a[i * m + j] - f * a[k * m + j];
      b[i] = b[i] - f * b[k];
    }
  }
  std::vector<QC> x(m);
  for (int i = m - 1; i >= 0; --i) {
    QC s = b[i];
    for (int j = i + 1; j < m; ++j) s = s - a[i * m + j] * x[j];
    x[i] = s / a[i * m + i];
  }
  std::vector<Cplx> out(m);
  for (int i = 0; i < m; ++i) out[i] = q_to(x[i]);
  return out;
}

// Enforce exact conjugate symmetry of the coefficients across the root
// pairing (n, m-n); the true solution has this symmetry, so projecting onto
// it only removes (asymmetric) numerical noise.
void symmetrize_coeffs(std::vector<Cplx>& c) {
  const int m = static_cast<int>(c.size());
  for (int n = 1; 2 * n < m; ++n) {
    const Cplx avg = 0.5 * (c[n] + std::conj(c[m - n]));
    c[n] = avg;
    c[m - n] = std::conj(avg);
  }
  c[0].imag(0.0);
  if (m % 2 == 0 && m > 1) c[m / 2].imag(0.0);
}

}  // namespace

ExpMixtureDist be_infinite_solve(const GammaEHModel& eh, double M) {
  ExpMixtureDist d;
  d.policy = Policy::BestEffort;
  d.M = M;
  d.roots = lambda_roots(eh.m, eh.rate, M);
  const int m = eh.m;
  double spread = 0.0;
  for (const auto& nu : d.roots.roots_norm)
    spread = std::max(spread, std::abs(1.0 - nu));
  if (spread < 1e-10) {
    // Roots numerically confluent at lambda (huge delta): the mixture
    // degenerates to the harvested-energy distribution itself. The
    // deviation is O(spread), far below anything observable.
    d.gamma_limit = true;
    d.coeffs.assign(m, Cplx(0.0));
    return d;
  }
  // The system sum_n c_n (1 - nu_n)^s = 1, s = 0..m-1, is the moment problem
  // of a unit point mass at 1 - nu = 0 over the Vandermonde nodes 1 - nu_n,
  // so its exact solution is the Lagrange weight c_n = prod_{k!=n}
  // nu_k / (nu_k - nu_n). Evaluating the product directly sidesteps the
  // ill-conditioning of the matrix when roots cluster at large delta.
  d.coeffs.resize(m);
  for (int n = 0; n < m; ++n) {
    QC prod{1, 0};
    for (int k = 0; k < m; ++k) {
      if (k == n) continue;
      const QC nuk = q_of(d.roots.roots_norm[k]);
      prod = prod * (nuk / (nuk - q_of(d.roots.roots_norm[n])));
    }
    d.coeffs[n] = q_to(prod);
  }
  symmetrize_coeffs(d.coeffs);
  CplxMatrix a(m, m);
  for (int s = 0; s < m; ++s)
    for (int n = 0; n < m; ++n) a(s, n) = ipow(1.0 - d.roots.roots_norm[n], s);
  d.solve_residual = coeff_residual(a, d.coeffs);
  return d;
}

ExpMixtureDist oo_infinite_solve(const GammaEHModel& eh, double M) {
  ExpMixtureDist d;
  d.policy = Policy::OnOff;
  d.M = M;
  d.roots = lambda_roots(eh.m, eh.rate, M);
  d.low = make_low_segment(d.roots);
  const int m = eh.m;
  // The system assembly loses several digits to cancellation for larger
  // m*delta; accumulate in long double to keep the solved coefficients
  // accurate to ~1e-12.
  using CplxL = std::complex<long double>;
  const long double mh = static_cast<long double>(eh.rate) * M;
  const long double pi_l = std::numbers::pi_v<long double>;

  std::vector<CplxL> nu(m), theta(m), ejkv(m);
  std::vector<std::vector<CplxL>> al(m, std::vector<CplxL>(m));
  std::vector<std::vector<CplxL>> bl(m, std::vector<CplxL>(m));
  for (int k = 0; k < m; ++k) {
    ejkv[k] = std::polar(1.0L, 2.0L * pi_l * k / m);
    theta[k] = (k == 0) ? CplxL(0.0L) : CplxL(1.0L) - ejkv[k];
  }
  for (int n = 0; n < m; ++n) {
    nu[n] = CplxL(d.roots.roots_norm[n].real(), d.roots.roots_norm[n].imag());
    for (int k = 0; k < m; ++k) {
      al[n][k] = 1.0L / (2.0L * (nu[n] / ejkv[k] + std::conj(theta[k])));
      bl[n][k] = 1.0L / (2.0L * (nu[n] * ejkv[k] + theta[k]));
    }
  }
  auto ipow_l = [](CplxL z, int p) {
    CplxL r = 1.0L;
    for (int i = 0; i < p; ++i) r *= z;
    return r;
  };
  auto fact_l = [](int k) { return static_cast<long double>(factorial(k)); };
  auto lig = [](int n, CplxL z) {
    return special::lower_inc_gamma_int_t<CplxL>(n, z);
  };

  // zeta_k: zeta_0 = M_hat, zeta_k = (1 - e^{-theta_k M_hat})/theta_k.
  std::vector<CplxL> zeta(m);
  zeta[0] = mh;
  for (int k = 1; k < m; ++k)
    zeta[k] = (1.0L - std::exp(-theta[k] * mh)) / theta[k];

  // D_n, independent of s.
  std::vector<CplxL> dvec(m);
  for (int n = 0; n < m; ++n) {
    CplxL ksum = 0.0L;
    for (int k = 0; k < m; ++k) {
      ksum += al[n][k] * zeta[k] + bl[n][k] * std::conj(zeta[k]) -
              (al[n][k] + bl[n][k]) / nu[n] * (1.0L - std::exp(-nu[n] * mh));
    }
    CplxL tsum = 0.0L;
    CplxL pow1mn = 1.0L;
    for (int t = 0; t < m; ++t) {
      CplxL inner = lig(t + 1, CplxL(mh)) / fact_l(t);
      long double re_k = 0.0L;
      for (int k = 0; k < m; ++k) {
        CplxL qsum = 0.0L;
        CplxL ejkq = 1.0L;
        for (int q = 0; q <= t; ++q) {
          qsum += ejkq / fact_l(q) * lig(q + 1, CplxL(mh));
          ejkq *= ejkv[k];
        }
        re_k += (ipow_l(1.0L / ejkv[k], t) * (zeta[k] - qsum)).real();
      }
      tsum += pow1mn * (inner + re_k / static_cast<long double>(m));
      pow1mn *= (1.0L - nu[n]);
    }
    dvec[n] = nu[n] / static_cast<long double>(m) * ksum - nu[n] * tsum + 1.0L;
  }

  // B_sn per the 1/lambda^{s+1} conditioning scale (normalized: power of 1).
  CplxMatrix a(m, m);
  for (int s = 0; s < m; ++s) {
    auto ifn = [&](CplxL beta) {  // I(beta) = beta^{s-m} gamma(m-s, beta M_hat)
      return ipow_l(1.0L / beta, m - s) * lig(m - s, beta * mh);
    };
    for (int n = 0; n < m; ++n) {
      CplxL bracket = ifn(nu[n] - 1.0L);
      for (int k = 0; k < m; ++k) {
        bracket += (al[n][k] * ifn(theta[k] - 1.0L) +
                    bl[n][k] * ifn(std::conj(theta[k]) - 1.0L) -
                    (al[n][k] + bl[n][k]) * ifn(nu[n] - 1.0L)) /
                   static_cast<long double>(m);
      }
      CplxL pow1mn = 1.0L;
      for (int t = 0; t < m; ++t) {
        CplxL inner =
            std::pow(mh, m + t - s) / static_cast<long double>(m + t - s);
        long double re_k = 0.0L;
        for (int k = 0; k < m; ++k) {
          CplxL qsum = 0.0L;
          CplxL ejkq = 1.0L;
          for (int q = 0; q <= t; ++q) {
            qsum += ejkq / fact_l(q) * std::pow(mh, m + q - s) /
                    static_cast<long double>(m + q - s);
            ejkq *= ejkv[k];
          }
          re_k += (ipow_l(1.0L / ejkv[k], t) * fact_l(t) *
                   (ifn(-ejkv[k]) - qsum))
                      .real();
        }
        bracket -= pow1mn / fact_l(t) *
                   (inner + re_k / static_cast<long double>(m));
        pow1mn *= (1.0L - nu[n]);
      }
      const long double sign = ((m - 1 - s) % 2 == 0) ? 1.0L : -1.0L;
      const CplxL bsn = -nu[n] * ipow_l(1.0L - nu[n], s) +
                        sign * nu[n] / fact_l(m - 1 - s) * bracket;
      const CplxL entry = dvec[n] + bsn;
      a(s, n) = Cplx(static_cast<double>(entry.real()),
                     static_cast<double>(entry.imag()));
    }
  }
  // The exact matrix satisfies a(s, n) = conj(a(s, m-n)); enforce that on the
  // assembled entries so the solved coefficients inherit exact conjugate
  // symmetry across the root pairing.
  for (int s = 0; s < m; ++s) {
    for (int n = 1; 2 * n < m; ++n) {
      const Cplx avg = 0.5 * (a(s, n) + std::conj(a(s, m - n)));
      a(s, n) = avg;
      a(s, m - n) = std::conj(avg);
    }
    a(s, 0).imag(0.0);
    if (m % 2 == 0 && m > 1) a(s, m / 2).imag(0.0);
  }
  d.coeffs = solve_quad(a, m);
  symmetrize_coeffs(d.coeffs);
  d.solve_residual = coeff_residual(a, d.coeffs);
  return d;
}

double integral_residual_infinite(const ExpMixtureDist& dist,
                                  const GammaEHModel& eh,
                                  const std::vector<double>& grid) {
  const double M = dist.M;
  // Tail integrals truncate where e^{-lambda_min u} is negligible.
  double min_rate = eh.rate;
  for (const auto& r : dist.roots.roots)
    min_rate = std::min(min_rate, r.real());
  const double hi_cut = M + 60.0 / min_rate;
  double worst = 0.0;
  for (double x : grid) {
    double rhs;
    if (dist.policy == Policy::BestEffort) {
      const double low_mass =
          integrate([&](double u) { return dist.pdf(u); }, 0.0, M, 1e-13,
                    1e-10);
      rhs = harvest_pdf(eh, x) * low_mass +
            integrate([&](double u) { return harvest_pdf(eh, x - u + M) *
                                             dist.pdf(u); },
                      M, M + x, 1e-13, 1e-10);
    } else if (x < M) {
      rhs = integrate([&](double u) { return harvest_pdf(eh, x - u) *
                                             dist.pdf(u); },
                      0.0, x, 1e-13, 1e-10) +
            integrate([&](double u) { return harvest_pdf(eh, x - u + M) *
                                             dist.pdf(u); },
                      M, M + x, 1e-13, 1e-10);
    } else {
      rhs = integrate([&](double u) { return harvest_pdf(eh, x - u) *
                                             dist.pdf(u); },
                      0.0, M, 1e-13, 1e-10) +
            integrate([&](double u) { return harvest_pdf(eh, x - u + M) *
                                             dist.pdf(u); },
                      M, std::min(M + x, hi_cut), 1e-13, 1e-10);
    }
    worst = std::max(worst, std::abs(dist.pdf(x) - rhs));
  }
  return worst;
}

double lindley_cdf_residual(const ExpMixtureDist& dist,
                            const GammaEHModel& eh,
                            const std::vector<double>& grid) {
  if (dist.policy != Policy::BestEffort)
    throw config_error("lindley_cdf_residual: best-effort policy only");
  double worst = 0.0;
  for (double x : grid) {
    const double rhs = integrate(
        [&](double u) { return dist.cdf(x - u + dist.M) * harvest_pdf(eh, u); },
        0.0, x, 1e-13, 1e-10);
    worst = std::max(worst, std::abs(dist.cdf(x) - rhs));
  }
  return worst;
}

}  // namespace ebuf
