#include "ebuf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ebuf/errors.hpp"

namespace ebuf {

namespace {

double inf_norm(const CplxMatrix& a) {
  double best = 0.0;
  for (int r = 0; r < a.rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < a.cols; ++c) s += std::abs(a(r, c));
    best = std::max(best, s);
  }
  return best;
}

struct Lu {
  CplxMatrix m;
  std::vector<int> perm;
};

Lu factor(const CplxMatrix& a) {
  const int n = a.rows;
  Lu lu{a, std::vector<int>(n)};
  for (int i = 0; i < n; ++i) lu.perm[i] = i;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int r = k + 1; r < n; ++r)
      if (std::abs(lu.m(r, k)) > std::abs(lu.m(piv, k))) piv = r;
    if (std::abs(lu.m(piv, k)) == 0.0)
      throw singular_error("solve_linear: exactly singular matrix",
                           std::numeric_limits<double>::infinity());
    if (piv != k) {
      for (int c = 0; c < n; ++c) std::swap(lu.m(k, c), lu.m(piv, c));
      std::swap(lu.perm[k], lu.perm[piv]);
    }
    for (int r = k + 1; r < n; ++r) {
      const Cplx f = lu.m(r, k) / lu.m(k, k);
      lu.m(r, k) = f;
      for (int c = k + 1; c < n; ++c) lu.m(r, c) -= f * lu.m(k, c);
    }
  }
  return lu;
}

std::vector<Cplx> lu_solve(const Lu& lu, const std::vector<Cplx>& b) {
  const int n = lu.m.rows;
  std::vector<Cplx> x(n);
  for (int r = 0; r < n; ++r) x[r] = b[lu.perm[r]];
  for (int r = 1; r < n; ++r)
    for (int c = 0; c < r; ++c) x[r] -= lu.m(r, c) * x[c];
  for (int r = n - 1; r >= 0; --r) {
    for (int c = r + 1; c < n; ++c) x[r] -= lu.m(r, c) * x[c];
    x[r] /= lu.m(r, r);
  }
  return x;
}

}  // namespace

std::vector<Cplx> mat_vec(const CplxMatrix& a, const std::vector<Cplx>& x) {
  std::vector<Cplx> y(a.rows, Cplx{});
  for (int r = 0; r < a.rows; ++r)
    for (int c = 0; c < a.cols; ++c) y[r] += a(r, c) * x[c];
  return y;
}

std::vector<Cplx> solve_linear(const CplxMatrix& a,
                               const std::vector<Cplx>& b) {
  if (a.rows != a.cols) throw config_error("solve_linear: matrix not square");
  if (static_cast<int>(b.size()) != a.rows)
    throw config_error("solve_linear: rhs size mismatch");
  const Lu lu = factor(a);

  // cond_inf(A) = ||A|| * ||A^{-1}||, the inverse norm from explicit columns;
  // matrices here are tiny (<= ~16), so the O(n^3) estimate is fine.
  const int n = a.rows;
  double inv_norm_1 = 0.0;           // 1-norm of A^{-1} columns -> inf-norm
  std::vector<double> row_abs(n, 0.0);
  for (int c = 0; c < n; ++c) {
    std::vector<Cplx> e(n, Cplx{});
    e[c] = 1.0;
    const auto col = lu_solve(lu, e);
    for (int r = 0; r < n; ++r) row_abs[r] += std::abs(col[r]);
  }
  for (int r = 0; r < n; ++r) inv_norm_1 = std::max(inv_norm_1, row_abs[r]);
  const double cond = inf_norm(a) * inv_norm_1;
  if (!(cond < 1e12))
    throw singular_error("solve_linear: condition estimate too large", cond);

  return lu_solve(lu, b);
}

}  // namespace ebuf
