#pragma once

#include <cstddef>
#include <vector>

namespace abjm {

// Minimal dense square matrix, row-major. The coupling machinery only ever
// manipulates matrices of the R(a, m) family and their factors.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {}

  int size() const { return n_; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  const std::vector<double>& storage() const { return a_; }

 private:
  int n_ = 0;
  std::vector<double> a_;
};

// Tridiagonal coupling matrix of the reduced vortex system together with
// everything the solvers consume: the Cholesky factor L and its closed-form
// inverse, R^{-1}, the vector r = R^{-1} 1, the leading principal minors,
// and lambda0 = 2 * (smallest eigenvalue of R).
struct CouplingMatrix {
  int m = 0;
  double a = 0.0;
  SquareMatrix R, L, Linv, Rinv;
  std::vector<double> r;
  std::vector<double> minors;
  double lambda0 = 0.0;
};

// R(a, m): diagonal 2a^2 + 2i - 1, sub/super-diagonal -(a^2 + i),
// i = 1..m. Throws ConfigError for m < 2 or a < 0.
SquareMatrix build_R(double a, int m);

// Leading principal minors R_1..R_m via the tridiagonal determinant
// recurrence (exact integers at a = 0, where R_i = i!).
std::vector<double> leading_minors(double a, int m);

// Closed-form lower-bidiagonal Cholesky factor:
//   L_11 = sqrt(R_1), L_{i,i-1} = -(a^2+i-1) sqrt(R_{i-2}/R_{i-1}),
//   L_ii = sqrt(R_i/R_{i-1}), with R_0 = 1.
// Only minor *ratios* enter, so the factor stays representable even when
// the minors themselves grow factorially. Throws NotPositiveDefiniteError
// on a non-positive pivot (cannot occur for matrices built by build_R).
SquareMatrix cholesky_factor(const SquareMatrix& R);

// Closed-form inverse of the Cholesky factor:
//   (L^-1)_ii = sqrt(R_{i-1}/R_i),
//   (L^-1)_ij = (a^2+j)...(a^2+i-1) R_{j-1} / sqrt(R_{i-1} R_i), j < i,
// evaluated as a product of bounded ratios.
SquareMatrix invert_L(const SquareMatrix& L);

// R^{-1} = (L^{-1})^T L^{-1}; every entry is strictly positive.
SquareMatrix invert_R(const SquareMatrix& Linv);

// Row sums r_i = sum_j (R^{-1})_ij; each strictly positive. At a = 0,
// r_i = m - i + 1.
std::vector<double> r_vector(const SquareMatrix& Rinv);

// lambda0 = 2 * min eigenvalue of R, computed by Sturm-sequence bisection
// on the symmetric tridiagonal data (relative tolerance 1e-12).
double lambda_zero(const SquareMatrix& R);

CouplingMatrix make_coupling_matrix(double a, int m);

// One inequality of the sharp doubly periodic existence test:
//   lhs = 4 pi sum_j (R^{-1})_ij n_j  <  rhs = lambda |Omega| sum_j (R^{-1})_ij,
// with K = (rhs - lhs)/lambda the natural-constraint target. Equality
// counts as nonexistence.
struct ExistenceCondition {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  double K = 0.0;
};

struct ExistenceCheck {
  std::vector<ExistenceCondition> conditions;
  bool all_hold = false;

  std::vector<double> K() const;
  int first_violated() const;  // 1-based index, 0 if none
};

// Evaluates all m conditions for vortex numbers n over a cell of the given
// area. Throws ConfigError if n.size() != m.
ExistenceCheck check_torus_existence(const CouplingMatrix& cm, double lambda,
                                     const std::vector<int>& n, double area);

// Smallest lambda * |Omega| product for which all conditions hold strictly:
//   4 pi max_i [ sum_j (R^{-1})_ij n_j / sum_j (R^{-1})_ij ].
double existence_threshold_lambda_area(const CouplingMatrix& cm, const std::vector<int>& n);

}  // namespace abjm
