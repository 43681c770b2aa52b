#pragma once

#include <complex>

namespace ebuf {

using Cplx = std::complex<double>;

namespace special {

// Factorials are tabulated up to 170! (the last one representable in a
// double); larger indices are rejected.
inline constexpr int kMaxFactorial = 170;
double factorial(int k);

// Principal branch of the Lambert W function, w e^w = z.
// Halley iteration seeded by a series near 0, the branch-point expansion
// near -1/e, and the log asymptotic elsewhere. Throws numeric_error on
// non-convergence.
Cplx lambert_w0(Cplx z);

// Lower incomplete gamma for integer shape n >= 1 and complex z:
//   gamma(n, z) = (n-1)! (1 - e^{-z} sum_{k<n} z^k / k!).
Cplx lower_inc_gamma_int(int n, Cplx z);

// Upper incomplete gamma, Gamma(n, z) = (n-1)! e^{-z} sum_{k<n} z^k / k!.
Cplx upper_inc_gamma_int(int n, Cplx z);

// e^z gamma(n, z) / (n-1)! = e^z - sum_{k<n} z^k / k!, evaluated stably
// (tail series near z = 0). This product appears throughout the on-off
// closed forms; computing it directly avoids overflow of e^z against a
// vanishing gamma factor.
Cplx exp_gamma_ratio(int n, Cplx z);

// Regularized lower incomplete gamma P(n, x) = gamma(n, x) / (n-1)! for
// real x >= 0 (Nakagami outage CDF).
double gamma_p_int(int n, double x);

// Modified Bessel function of the second kind, integer order n >= 0,
// x > 0, via adaptive quadrature of K_n(x) = int_0^inf e^{-x cosh t}
// cosh(n t) dt.
double bessel_k_int(int n, double x);

// N(t,a,b,c,d) = int_0^1 e^{-a/x - b x} x^{-t} (x-c)^d / d! dx.
// Throws on the divergent a = 0, t >= d+2 case.
double n_kernel(int t, double a, double b, double c, int d);

// Same kernel with a complex decay rate b (conjugate-paired uses sum to a
// real value at the caller).
Cplx n_kernel_cplx(int t, double a, Cplx b, double c, int d);

// Generic-precision variants of the gamma helpers, used where the linear
// systems need extended-precision assembly. C is std::complex<double> or
// std::complex<long double>.
template <typename C>
C exp_gamma_ratio_t(int n, C z) {
  using R = typename C::value_type;
  if (std::abs(z) < R(0.9) * n) {
    C term = R(1);
    for (int k = 1; k <= n; ++k) term *= z / R(k);
    C sum = term;
    for (int k = n + 1; k <= n + 600; ++k) {
      term *= z / R(k);
      sum += term;
      if (std::abs(term) < R(1e-22) * std::abs(sum)) break;
    }
    return sum;
  }
  C partial = R(0);
  C term = R(1);
  for (int k = 0; k < n; ++k) {
    partial += term;
    term *= z / R(k + 1);
  }
  return std::exp(z) - partial;
}

template <typename C>
C lower_inc_gamma_int_t(int n, C z) {
  using R = typename C::value_type;
  return R(factorial(n - 1)) * std::exp(-z) * exp_gamma_ratio_t<C>(n, z);
}

}  // namespace special
}  // namespace ebuf
