#include "abjm/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "abjm/errors.hpp"

namespace abjm {

namespace {

// Recover a^2 from the top-left entry 2a^2 + 1. Matrices outside the
// R(a, m) family are rejected by structure checks in the callers.
double deformation_sq_from_R(const SquareMatrix& R) {
  return 0.5 * (R(0, 0) - 1.0);
}

void require_R_shape(const SquareMatrix& R, const char* who) {
  const int m = R.size();
  if (m < 2) throw ConfigError(std::string(who) + ": matrix dimension must be >= 2");
  const double a2 = deformation_sq_from_R(R);
  if (a2 < -1e-12) throw ConfigError(std::string(who) + ": not a matrix of the R(a, m) family");
  const double scale = std::abs(R(m - 1, m - 1)) + 1.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double expected = (i == j)          ? 2.0 * a2 + 2.0 * (i + 1) - 1.0
                              : (std::abs(i - j) == 1) ? -(a2 + std::min(i, j) + 1.0)
                                                       : 0.0;
      if (std::abs(R(i, j) - expected) > 1e-9 * scale)
        throw ConfigError(std::string(who) + ": not a matrix of the R(a, m) family");
    }
  }
}

// Sturm count: number of eigenvalues of the tridiagonal matrix strictly
// below x, via the shifted LDL^T sweep.
int eigenvalues_below(const std::vector<double>& diag, const std::vector<double>& off, double x) {
  const int m = static_cast<int>(diag.size());
  int count = 0;
  double q = diag[0] - x;
  if (q < 0.0) ++count;
  for (int i = 1; i < m; ++i) {
    double denom = q;
    if (denom == 0.0) denom = std::numeric_limits<double>::min();
    q = (diag[i] - x) - off[i - 1] * off[i - 1] / denom;
    if (q < 0.0) ++count;
  }
  return count;
}

}  // namespace

SquareMatrix build_R(double a, int m) {
  if (m < 2) throw ConfigError("model.m: must be an integer >= 2, got " + std::to_string(m));
  if (!(a >= 0.0)) throw ConfigError("model.a: must be >= 0");
  const double a2 = a * a;
  SquareMatrix R(m);
  for (int i = 0; i < m; ++i) {
    R(i, i) = 2.0 * a2 + 2.0 * (i + 1) - 1.0;
    if (i + 1 < m) {
      R(i, i + 1) = -(a2 + i + 1.0);
      R(i + 1, i) = -(a2 + i + 1.0);
    }
  }
  return R;
}

std::vector<double> leading_minors(double a, int m) {
  const double a2 = a * a;
  std::vector<double> minors(m);
  double prev2 = 1.0;  // R_0 = 1 by convention
  double prev1 = 2.0 * a2 + 1.0;
  minors[0] = prev1;
  for (int i = 2; i <= m; ++i) {
    const double diag = 2.0 * a2 + 2.0 * i - 1.0;
    const double off = a2 + i - 1.0;
    const double cur = diag * prev1 - off * off * prev2;
    minors[i - 1] = cur;
    prev2 = prev1;
    prev1 = cur;
  }
  return minors;
}

SquareMatrix cholesky_factor(const SquareMatrix& R) {
  require_R_shape(R, "cholesky_factor");
  const int m = R.size();
  const double a2 = deformation_sq_from_R(R);

  // rho_i = R_i / R_{i-1}; the recurrence keeps every quantity a ratio.
  std::vector<double> rho(m);
  rho[0] = 2.0 * a2 + 1.0;
  for (int i = 2; i <= m; ++i) {
    const double off = a2 + i - 1.0;
    rho[i - 1] = (2.0 * a2 + 2.0 * i - 1.0) - off * off / rho[i - 2];
    if (!(rho[i - 1] > 0.0))
      throw NotPositiveDefiniteError("cholesky_factor: non-positive pivot at index " +
                                     std::to_string(i));
  }

  SquareMatrix L(m);
  L(0, 0) = std::sqrt(rho[0]);
  for (int i = 1; i < m; ++i) {
    L(i, i - 1) = -(a2 + i) / std::sqrt(rho[i - 1]);
    L(i, i) = std::sqrt(rho[i]);
  }
  return L;
}

SquareMatrix invert_L(const SquareMatrix& L) {
  const int m = L.size();
  if (m < 1) throw ConfigError("invert_L: empty matrix");
  const double a2 = 0.5 * (L(0, 0) * L(0, 0) - 1.0);

  std::vector<double> rho(m);
  for (int i = 0; i < m; ++i) rho[i] = L(i, i) * L(i, i);

  SquareMatrix Linv(m);
  for (int i = 0; i < m; ++i) {
    Linv(i, i) = 1.0 / std::sqrt(rho[i]);
    // (L^-1)_ij = prod_{k=j}^{i-1} [(a^2+k)/rho_k] / sqrt(rho_i), built
    // backwards so each entry reuses the previous product.
    double prod = 1.0;
    for (int j = i - 1; j >= 0; --j) {
      prod *= (a2 + j + 1.0) / rho[j];
      Linv(i, j) = prod / std::sqrt(rho[i]);
    }
  }
  return Linv;
}

SquareMatrix invert_R(const SquareMatrix& Linv) {
  const int m = Linv.size();
  SquareMatrix Rinv(m);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      double s = 0.0;
      for (int k = j; k < m; ++k) s += Linv(k, i) * Linv(k, j);
      Rinv(i, j) = s;
      Rinv(j, i) = s;
    }
  }
  return Rinv;
}

std::vector<double> r_vector(const SquareMatrix& Rinv) {
  const int m = Rinv.size();
  std::vector<double> r(m, 0.0);
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += Rinv(i, j);
    r[i] = s;
  }
  return r;
}

double lambda_zero(const SquareMatrix& R) {
  const int m = R.size();
  std::vector<double> diag(m), off(m > 1 ? m - 1 : 0);
  for (int i = 0; i < m; ++i) diag[i] = R(i, i);
  for (int i = 0; i + 1 < m; ++i) off[i] = R(i, i + 1);

  // Gershgorin bracket for the spectrum.
  double lo = diag[0], hi = diag[0];
  for (int i = 0; i < m; ++i) {
    double radius = 0.0;
    if (i > 0) radius += std::abs(off[i - 1]);
    if (i + 1 < m) radius += std::abs(off[i]);
    lo = std::min(lo, diag[i] - radius);
    hi = std::max(hi, diag[i] + radius);
  }

  // Bisect for the smallest eigenvalue: the largest x with no eigenvalue
  // below it.
  const double rel_tol = 1e-12;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (eigenvalues_below(diag, off, mid) == 0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= rel_tol * std::max({std::abs(lo), std::abs(hi), 1e-300})) break;
  }
  return 2.0 * 0.5 * (lo + hi);
}

CouplingMatrix make_coupling_matrix(double a, int m) {
  CouplingMatrix cm;
  cm.m = m;
  cm.a = a;
  cm.R = build_R(a, m);
  cm.minors = leading_minors(a, m);
  cm.L = cholesky_factor(cm.R);
  cm.Linv = invert_L(cm.L);
  cm.Rinv = invert_R(cm.Linv);
  cm.r = r_vector(cm.Rinv);
  cm.lambda0 = lambda_zero(cm.R);
  return cm;
}

std::vector<double> ExistenceCheck::K() const {
  std::vector<double> out(conditions.size());
  for (std::size_t i = 0; i < conditions.size(); ++i) out[i] = conditions[i].K;
  return out;
}

int ExistenceCheck::first_violated() const {
  for (std::size_t i = 0; i < conditions.size(); ++i)
    if (!conditions[i].holds) return static_cast<int>(i) + 1;
  return 0;
}

ExistenceCheck check_torus_existence(const CouplingMatrix& cm, double lambda,
                                     const std::vector<int>& n, double area) {
  if (static_cast<int>(n.size()) != cm.m)
    throw ConfigError("vortex: expected " + std::to_string(cm.m) + " counts, got " +
                      std::to_string(n.size()));
  if (!(area > 0.0)) throw ConfigError("domain: cell area must be > 0");
  if (!(lambda > 0.0)) throw ConfigError("model.lambda: must be > 0");

  constexpr double four_pi = 4.0 * std::numbers::pi;
  ExistenceCheck out;
  out.conditions.resize(cm.m);
  out.all_hold = true;
  for (int i = 0; i < cm.m; ++i) {
    double weighted_n = 0.0;
    for (int j = 0; j < cm.m; ++j) weighted_n += cm.Rinv(i, j) * n[j];
    ExistenceCondition& c = out.conditions[i];
    c.lhs = four_pi * weighted_n;
    c.rhs = lambda * area * cm.r[i];
    c.holds = c.lhs < c.rhs;  // strict; equality counts as nonexistence
    c.K = area * cm.r[i] - (four_pi / lambda) * weighted_n;
    out.all_hold = out.all_hold && c.holds;
  }
  return out;
}

double existence_threshold_lambda_area(const CouplingMatrix& cm, const std::vector<int>& n) {
  if (static_cast<int>(n.size()) != cm.m)
    throw ConfigError("vortex: expected " + std::to_string(cm.m) + " counts, got " +
                      std::to_string(n.size()));
  constexpr double four_pi = 4.0 * std::numbers::pi;
  double worst = 0.0;
  for (int i = 0; i < cm.m; ++i) {
    double weighted_n = 0.0;
    for (int j = 0; j < cm.m; ++j) weighted_n += cm.Rinv(i, j) * n[j];
    worst = std::max(worst, weighted_n / cm.r[i]);
  }
  return four_pi * worst;
}

}  // namespace abjm
