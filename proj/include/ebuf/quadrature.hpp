#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "ebuf/errors.hpp"

namespace ebuf {

namespace detail {

// Gauss-Kronrod 7-15 nodes/weights on [-1,1].
inline constexpr double gk_nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,
    0.741531185599394,  0.864864423359769,  0.949107912342759,
    0.991455371120813};

inline constexpr double gk_wk[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529};

// Gauss weights attached to the odd Kronrod nodes (index 1,3,...,13).
inline constexpr double gk_wg[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870};

template <typename F>
auto gk15(const F& f, double a, double b, double& err) {
  using R = decltype(f(a));
  const double h = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  R kres{};
  R gres{};
  for (int i = 0; i < 15; ++i) {
    const R fv = f(mid + h * gk_nodes[i]);
    kres += gk_wk[i] * fv;
    if (i % 2 == 1) gres += gk_wg[i / 2] * fv;
  }
  kres *= h;
  gres *= h;
  err = std::abs(kres - gres);
  return kres;
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration of f over [a,b]. Works for real- and
// complex-valued integrands. Globally adaptive: repeatedly splits the
// interval with the largest error estimate until the summed error meets the
// tolerance or the interval budget is exhausted.
template <typename F>
auto integrate(const F& f, double a, double b, double abs_tol = 1e-12,
               double rel_tol = 1e-12, int max_intervals = 4000) {
  using R = decltype(f(a));
  if (!(b > a)) return R{};
  struct Seg {
    double lo, hi, err;
    R val;
  };
  std::vector<Seg> segs;
  double err0 = 0.0;
  const R v0 = detail::gk15(f, a, b, err0);
  segs.push_back({a, b, err0, v0});
  while (static_cast<int>(segs.size()) < max_intervals) {
    double total_err = 0.0;
    R total{};
    size_t worst = 0;
    for (size_t i = 0; i < segs.size(); ++i) {
      total_err += segs[i].err;
      total += segs[i].val;
      if (segs[i].err > segs[worst].err) worst = i;
    }
    if (total_err <= abs_tol || total_err <= rel_tol * std::abs(total)) break;
    Seg s = segs[worst];
    if (s.hi - s.lo <= 1e-15 * (std::abs(s.lo) + std::abs(s.hi)) + 1e-300)
      break;  // cannot subdivide further in double precision
    const double mid = 0.5 * (s.lo + s.hi);
    Seg l{s.lo, mid, 0.0, R{}};
    Seg r{mid, s.hi, 0.0, R{}};
    l.val = detail::gk15(f, l.lo, l.hi, l.err);
    r.val = detail::gk15(f, r.lo, r.hi, r.err);
    segs[worst] = l;
    segs.push_back(r);
  }
  R total{};
  for (const auto& s : segs) total += s.val;
  return total;
}

// Integrates f over [a, inf) for integrands with (at least) exponential
// decay rate `decay` (> 0): truncates where the envelope is negligible.
template <typename F>
auto integrate_to_inf(const F& f, double a, double decay,
                      double abs_tol = 1e-12, double rel_tol = 1e-12) {
  if (!(decay > 0.0)) throw numeric_error("integrate_to_inf: need decay > 0");
  const double span = 45.0 / decay;
  return integrate(f, a, a + span, abs_tol, rel_tol);
}

}  // namespace ebuf
