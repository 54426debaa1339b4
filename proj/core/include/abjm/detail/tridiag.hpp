#pragma once

#include <cmath>

namespace abjm::detail {

// Cholesky factorization and solve for a symmetric positive definite
// tridiagonal system, in the two-array form (l = sqrt-diagonal,
// s = scaled subdiagonal). Returns false on a non-positive pivot.
inline bool tri_cholesky_factor(int m, const double* diag, const double* sub, double* l,
                                double* s) {
  double piv = diag[0];
  if (!(piv > 0.0)) return false;
  l[0] = std::sqrt(piv);
  for (int i = 1; i < m; ++i) {
    s[i - 1] = sub[i - 1] / l[i - 1];
    piv = diag[i] - s[i - 1] * s[i - 1];
    if (!(piv > 0.0)) return false;
    l[i] = std::sqrt(piv);
  }
  return true;
}

// Solves (L L^T) x = b in place given the factor arrays.
inline void tri_cholesky_solve(int m, const double* l, const double* s, double* x) {
  x[0] /= l[0];
  for (int i = 1; i < m; ++i) x[i] = (x[i] - s[i - 1] * x[i - 1]) / l[i];
  x[m - 1] /= l[m - 1];
  for (int i = m - 2; i >= 0; --i) x[i] = (x[i] - s[i] * x[i + 1]) / l[i];
}

}  // namespace abjm::detail
