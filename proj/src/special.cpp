#include "ebuf/special.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "ebuf/errors.hpp"
#include "ebuf/quadrature.hpp"

namespace ebuf::special {

namespace {

std::array<double, kMaxFactorial + 1> make_factorials() {
  std::array<double, kMaxFactorial + 1> f{};
  f[0] = 1.0;
  for (int k = 1; k <= kMaxFactorial; ++k) f[k] = f[k - 1] * k;
  return f;
}

const std::array<double, kMaxFactorial + 1> kFact = make_factorials();

}  // namespace

double factorial(int k) {
  if (k < 0 || k > kMaxFactorial)
    throw numeric_error("factorial: index out of tabulated range: " +
                        std::to_string(k));
  return kFact[k];
}

Cplx lambert_w0(Cplx z) {
  const double inv_e = std::exp(-1.0);
  if (z == Cplx(0.0, 0.0)) return {0.0, 0.0};

  // Seed.
  Cplx w;
  const Cplx p2 = 2.0 * (std::exp(1.0) * z + 1.0);
  if (std::abs(p2) < 0.4) {
    // Branch-point expansion around z = -1/e.
    const Cplx p = std::sqrt(p2);
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    if (std::abs(p) < 1e-8) return w;  // iteration would divide by ~0
  } else if (std::abs(z) < 0.5) {
    w = z * (1.0 - z + 1.5 * z * z);
  } else {
    w = std::log(z);
    if (std::abs(w) > 1.0) w -= std::log(w);
  }

  Cplx last = w;
  for (int it = 0; it < 100; ++it) {
    const Cplx ew = std::exp(w);
    const Cplx r = w * ew - z;
    if (std::abs(r) <= 1e-14 * (1.0 + std::abs(z))) {
      // Real z >= -1/e gives a real W; strip iteration noise.
      if (std::abs(z.imag()) == 0.0 && z.real() >= -inv_e &&
          std::abs(w.imag()) < 1e-14 * std::abs(w.real()) + 1e-300)
        w = Cplx(w.real(), 0.0);
      return w;
    }
    // Halley step.
    const Cplx denom = ew * (w + 1.0) - (w + 2.0) * r / (2.0 * w + 2.0);
    w -= r / denom;
    last = w;
  }
  std::ostringstream os;
  os << "lambert_w0: no convergence for z = (" << z.real() << "," << z.imag()
     << "), last iterate (" << last.real() << "," << last.imag() << ")";
  throw numeric_error(os.str());
}

Cplx exp_gamma_ratio(int n, Cplx z) {
  if (n < 1) throw numeric_error("exp_gamma_ratio: n must be >= 1");
  if (std::abs(z) > 700.0)
    throw numeric_error("exp_gamma_ratio: |z| too large");
  return exp_gamma_ratio_t<Cplx>(n, z);
}

Cplx lower_inc_gamma_int(int n, Cplx z) {
  if (n < 1) throw numeric_error("lower_inc_gamma_int: n must be >= 1");
  if (std::abs(z) > 700.0)
    throw numeric_error("lower_inc_gamma_int: |z| too large");
  return lower_inc_gamma_int_t<Cplx>(n, z);
}

Cplx upper_inc_gamma_int(int n, Cplx z) {
  if (n < 1) throw numeric_error("upper_inc_gamma_int: n must be >= 1");
  if (std::abs(z) > 700.0)
    throw numeric_error("upper_inc_gamma_int: |z| too large");
  Cplx sum = 0.0;
  Cplx term = 1.0;
  for (int k = 0; k < n; ++k) {
    sum += term;
    term *= z / static_cast<double>(k + 1);
  }
  return factorial(n - 1) * std::exp(-z) * sum;
}

double gamma_p_int(int n, double x) {
  if (x < 0.0) throw numeric_error("gamma_p_int: x must be >= 0");
  if (x > 700.0) return 1.0;
  return std::real(exp_gamma_ratio(n, Cplx(x, 0.0))) * std::exp(-x);
}

double bessel_k_int(int n, double x) {
  if (x <= 0.0) throw config_error("bessel_k_int: x must be > 0");
  if (n < 0) n = -n;
  // Truncate where x cosh(t) - n t > 50: beyond that the integrand is below
  // e^{-50} relative to its peak scale.
  double hi = 1.0;
  while (x * std::cosh(hi) - n * hi < 50.0 + n) hi += 0.5;
  const auto f = [&](double t) {
    return std::exp(-x * std::cosh(t) + n * t) * 0.5 *
           (1.0 + std::exp(-2.0 * n * t));
  };
  const double rough = f(0.0) * hi;  // crude scale for the absolute budget
  return integrate(f, 0.0, hi, 1e-14 * (1.0 + rough), 1e-12);
}

namespace {

// Start of the quadrature interval for the N kernel: below eps the factor
// e^{-a/x} x^{-t} |x-c|^d is under 1e-18 of O(1).
double n_kernel_eps(int t, double a, double c, int d) {
  if (a <= 0.0) return 0.0;
  double eps = std::min(0.5, a / 45.0);
  for (int i = 0; i < 4; ++i) {
    const double logpoly =
        -t * std::log(eps) + d * std::log(std::abs(eps - c) + 1.0);
    eps = a / (45.0 + std::max(0.0, logpoly));
    eps = std::min(eps, 0.5);
  }
  return eps;
}

int ncheck(int t, double a, double b_re, int d) {
  if (a < 0.0) throw config_error("n_kernel: a must be >= 0");
  if (b_re < 0.0) throw config_error("n_kernel: Re(b) must be >= 0");
  if (d < 0 || t < 0) throw config_error("n_kernel: t, d must be >= 0");
  if (a == 0.0 && t >= d + 2)
    throw config_error("n_kernel: divergent integral (a=0, t >= d+2)");
  return 0;
}

}  // namespace

double n_kernel(int t, double a, double b, double c, int d) {
  ncheck(t, a, b, d);
  const double dfac = factorial(d);
  const double eps = n_kernel_eps(t, a, c, d);
  const auto f = [&](double x) {
    return std::exp(-a / x - b * x - t * std::log(x)) *
           std::pow(x - c, d) / dfac;
  };
  return integrate(f, eps, 1.0, 1e-12, 1e-11);
}

Cplx n_kernel_cplx(int t, double a, Cplx b, double c, int d) {
  ncheck(t, a, b.real(), d);
  const double dfac = factorial(d);
  const double eps = n_kernel_eps(t, a, c, d);
  const auto f = [&](double x) -> Cplx {
    return std::exp(Cplx(-a / x - t * std::log(x), 0.0) - b * x) *
           std::pow(x - c, d) / dfac;
  };
  return integrate(f, eps, 1.0, 1e-12, 1e-11);
}

}  // namespace ebuf::special
