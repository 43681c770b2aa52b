#pragma once

#include <complex>
#include <vector>

namespace ebuf {

using Cplx = std::complex<double>;

struct CplxMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<Cplx> entries;  // row-major

  CplxMatrix() = default;
  CplxMatrix(int r, int c) : rows(r), cols(c), entries(r * c) {}

  Cplx& operator()(int r, int c) { return entries[r * cols + c]; }
  const Cplx& operator()(int r, int c) const { return entries[r * cols + c]; }
};

std::vector<Cplx> mat_vec(const CplxMatrix& a, const std::vector<Cplx>& x);

// Gaussian elimination with partial pivoting plus an infinity-norm condition
// estimate; throws singular_error if the estimate exceeds 1e12.
std::vector<Cplx> solve_linear(const CplxMatrix& a, const std::vector<Cplx>& b);

}  // namespace ebuf
