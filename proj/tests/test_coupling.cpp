#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "abjm/coupling.hpp"
#include "abjm/errors.hpp"
#include "test_support.hpp"

using namespace abjm;
using testsupport::Lcg;

namespace {
const std::vector<double> kSampleA = {0.0, 0.3, 1.0, 2.5};
const std::vector<int> kSampleM = {2, 3, 5, 10, 30, 50};

// Closed forms for m = 2 at arbitrary a (inverse, row sums, lambda0).
SquareMatrix rinv_m2(double a) {
  const double a2 = a * a;
  const double det = 3 * a2 * a2 + 6 * a2 + 2;
  SquareMatrix M(2);
  M(0, 0) = (2 * a2 + 3) / det;
  M(0, 1) = (a2 + 1) / det;
  M(1, 0) = (a2 + 1) / det;
  M(1, 1) = (2 * a2 + 1) / det;
  return M;
}

double lambda0_m2(double a) {
  const double a2 = a * a;
  return 2.0 * (2 * a2 - std::sqrt(a2 * a2 + 2 * a2 + 2) + 2);
}

// m = 3 inverse: entries polynomial in a^2 over a common denominator.
SquareMatrix rinv_m3(double a) {
  const double x = a * a;
  const double det = 4 * x * x * x + 18 * x * x + 22 * x + 6;
  SquareMatrix M(3);
  M(0, 0) = 3 * x * x + 12 * x + 11;
  M(0, 1) = M(1, 0) = 2 * x * x + 7 * x + 5;
  M(0, 2) = M(2, 0) = x * x + 3 * x + 2;
  M(1, 1) = 4 * x * x + 12 * x + 5;
  M(1, 2) = M(2, 1) = 2 * x * x + 5 * x + 2;
  M(2, 2) = 3 * x * x + 6 * x + 2;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) M(i, j) /= det;
  return M;
}
}  // namespace

TEST_CASE("build_R matches the tridiagonal family") {
  SUBCASE("m=2 general a") {
    for (double a : kSampleA) {
      const double a2 = a * a;
      const SquareMatrix R = build_R(a, 2);
      CHECK(R(0, 0) == doctest::Approx(2 * a2 + 1).epsilon(1e-15));
      CHECK(R(0, 1) == doctest::Approx(-(a2 + 1)).epsilon(1e-15));
      CHECK(R(1, 0) == R(0, 1));
      CHECK(R(1, 1) == doctest::Approx(2 * a2 + 3).epsilon(1e-15));
    }
  }
  SUBCASE("a=0 m=3 literal") {
    const SquareMatrix R = build_R(0.0, 3);
    const double expect[3][3] = {{1, -1, 0}, {-1, 3, -2}, {0, -2, 5}};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(R(i, j) == expect[i][j]);
  }
  SUBCASE("a=1 m=2 literal") {
    const SquareMatrix R = build_R(1.0, 2);
    CHECK(R(0, 0) == 3.0);
    CHECK(R(0, 1) == -2.0);
    CHECK(R(1, 1) == 5.0);
  }
  SUBCASE("invalid dimension") {
    CHECK_THROWS_AS(build_R(0.0, 1), ConfigError);
    CHECK_THROWS_AS(build_R(-0.5, 3), ConfigError);
  }
}

TEST_CASE("leading minors: positivity, growth, and exact factorials at a=0") {
  for (double a : kSampleA) {
    for (int m : kSampleM) {
      const std::vector<double> minors = leading_minors(a, m);
      REQUIRE(static_cast<int>(minors.size()) == m);
      CHECK(minors[0] == doctest::Approx(2 * a * a + 1).epsilon(1e-15));
      for (int i = 0; i < m; ++i) CHECK(minors[i] > 0.0);
      for (int i = 1; i < m; ++i) CHECK(minors[i] > minors[i - 1]);
    }
  }
  // Exact integer check against the factorial recurrence for m <= 12.
  const std::vector<double> minors = leading_minors(0.0, 12);
  std::int64_t fact = 1;
  for (int i = 1; i <= 12; ++i) {
    fact *= i;
    CHECK(minors[i - 1] == static_cast<double>(fact));
  }
}

TEST_CASE("cholesky factor: closed form vs dense oracle and defining identity") {
  for (double a : kSampleA) {
    for (int m : kSampleM) {
      const SquareMatrix R = build_R(a, m);
      const SquareMatrix L = cholesky_factor(R);

      // L L^T = R to 1e-12 relative in the max norm.
      SquareMatrix LLT(m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          double s = 0.0;
          for (int k = 0; k <= std::min(i, j); ++k) s += L(i, k) * L(j, k);
          LLT(i, j) = s;
        }
      CHECK(testsupport::max_abs_diff(LLT, R) <= 1e-12 * testsupport::max_abs(R));

      const SquareMatrix oracle = testsupport::dense_cholesky(R);
      CHECK(testsupport::max_abs_diff(L, oracle) <= 1e-11 * testsupport::max_abs(oracle));
    }
  }

  SUBCASE("a=0 m=2 literal factor") {
    const SquareMatrix L = cholesky_factor(build_R(0.0, 2));
    CHECK(L(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(L(1, 0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(L(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(L(0, 1) == 0.0);
  }
  SUBCASE("a=0 m=4 diagonal from factorial minors") {
    const SquareMatrix L = cholesky_factor(build_R(0.0, 4));
    const double expect[4] = {1.0, std::sqrt(2.0), std::sqrt(3.0), 2.0};
    for (int i = 0; i < 4; ++i) CHECK(L(i, i) == doctest::Approx(expect[i]).epsilon(1e-14));
  }
  SUBCASE("matrices outside the family are rejected") {
    SquareMatrix M(2);
    M(0, 0) = 1.0;
    M(0, 1) = M(1, 0) = 0.5;
    M(1, 1) = 1.0;
    CHECK_THROWS(cholesky_factor(M));
  }
}

TEST_CASE("invert_L: closed form vs back-substitution oracle") {
  for (double a : kSampleA) {
    for (int m : kSampleM) {
      const SquareMatrix L = cholesky_factor(build_R(a, m));
      const SquareMatrix Linv = invert_L(L);
      const SquareMatrix oracle = testsupport::invert_lower_triangular(L);
      CHECK(testsupport::max_abs_diff(Linv, oracle) <=
            1e-12 * std::max(1.0, testsupport::max_abs(oracle)));

      // L^{-1} L = I.
      double worst = 0.0;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          double s = 0.0;
          for (int k = 0; k < m; ++k) s += Linv(i, k) * L(k, j);
          worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
        }
      CHECK(worst <= 1e-12);
    }
  }
  SUBCASE("a=0 m=2 literal inverse") {
    const SquareMatrix Linv = invert_L(cholesky_factor(build_R(0.0, 2)));
    CHECK(Linv(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(Linv(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(Linv(1, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  }
}

TEST_CASE("invert_R: positivity, closed forms, and residual identity") {
  for (double a : kSampleA) {
    for (int m : kSampleM) {
      const CouplingMatrix cm = make_coupling_matrix(a, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) CHECK(cm.Rinv(i, j) > 0.0);

      // R^{-1} R = I to 1e-10.
      double worst = 0.0;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          double s = 0.0;
          for (int k = 0; k < m; ++k) s += cm.Rinv(i, k) * cm.R(k, j);
          worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
        }
      CHECK(worst <= 1e-10);
    }
  }

  SUBCASE("m=2 closed form at sampled a") {
    for (double a : {0.0, 1.0, 2.0}) {
      const CouplingMatrix cm = make_coupling_matrix(a, 2);
      CHECK(testsupport::max_abs_diff(cm.Rinv, rinv_m2(a)) <= 1e-10);
    }
  }
  SUBCASE("a=1 m=2 is (1/11)[[5,2],[2,3]]") {
    const CouplingMatrix cm = make_coupling_matrix(1.0, 2);
    CHECK(cm.Rinv(0, 0) == doctest::Approx(5.0 / 11.0).epsilon(1e-14));
    CHECK(cm.Rinv(0, 1) == doctest::Approx(2.0 / 11.0).epsilon(1e-14));
    CHECK(cm.Rinv(1, 1) == doctest::Approx(3.0 / 11.0).epsilon(1e-14));
  }
  SUBCASE("m=3 closed form at a in {0,1}") {
    for (double a : {0.0, 1.0}) {
      const CouplingMatrix cm = make_coupling_matrix(a, 3);
      CHECK(testsupport::max_abs_diff(cm.Rinv, rinv_m3(a)) <= 1e-10);
    }
  }
  SUBCASE("a=0 harmonic-tail entries for several m") {
    for (int m : {2, 5, 12}) {
      const CouplingMatrix cm = make_coupling_matrix(0.0, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          double expect = 0.0;
          for (int l = std::max(i, j) + 1; l <= m; ++l) expect += 1.0 / l;
          CHECK(std::abs(cm.Rinv(i, j) - expect) <= 1e-10);
        }
    }
  }
}

TEST_CASE("r vector: positivity, defining identity, closed forms") {
  for (double a : kSampleA) {
    for (int m : kSampleM) {
      const CouplingMatrix cm = make_coupling_matrix(a, m);
      double worst = 0.0;
      for (int i = 0; i < m; ++i) {
        CHECK(cm.r[i] > 0.0);
        double s = 0.0;
        for (int j = 0; j < m; ++j) s += cm.R(i, j) * cm.r[j];
        worst = std::max(worst, std::abs(s - 1.0));
      }
      CHECK(worst <= 1e-10);  // R r = 1
    }
  }

  SUBCASE("a=0: r_i = m - i + 1 to 1e-12") {
    for (int m : {2, 3, 10, 30}) {
      const CouplingMatrix cm = make_coupling_matrix(0.0, m);
      for (int i = 0; i < m; ++i) CHECK(std::abs(cm.r[i] - (m - i)) <= 1e-12 * m);
    }
  }
  SUBCASE("m=2 closed form at sampled a") {
    for (double a : {0.0, 1.0, 2.0}) {
      const CouplingMatrix cm = make_coupling_matrix(a, 2);
      const double a2 = a * a;
      const double det = 3 * a2 * a2 + 6 * a2 + 2;
      CHECK(cm.r[0] == doctest::Approx((3 * a2 + 4) / det).epsilon(1e-12));
      CHECK(cm.r[1] == doctest::Approx((3 * a2 + 2) / det).epsilon(1e-12));
    }
  }
  SUBCASE("a=1 m=2 is (7/11, 5/11)") {
    const CouplingMatrix cm = make_coupling_matrix(1.0, 2);
    CHECK(cm.r[0] == doctest::Approx(7.0 / 11.0).epsilon(1e-14));
    CHECK(cm.r[1] == doctest::Approx(5.0 / 11.0).epsilon(1e-14));
  }
  SUBCASE("m=3 closed forms at a in {0,1}") {
    for (double a : {0.0, 1.0}) {
      const CouplingMatrix cm = make_coupling_matrix(a, 3);
      const double x = a * a;
      const double det = 2 * x * x * x + 9 * x * x + 11 * x + 3;
      CHECK(cm.r[0] == doctest::Approx((3 * x * x + 11 * x + 9) / det).epsilon(1e-12));
      CHECK(cm.r[1] == doctest::Approx((4 * x * x + 12 * x + 6) / det).epsilon(1e-12));
      CHECK(cm.r[2] == doctest::Approx((3 * x * x + 7 * x + 3) / det).epsilon(1e-12));
    }
  }
}

TEST_CASE("lambda0: m=2 closed form, positivity, eigen residual oracle") {
  SUBCASE("m=2 closed form at a in {0,1,2}") {
    for (double a : {0.0, 1.0, 2.0}) {
      const SquareMatrix R = build_R(a, 2);
      CHECK(lambda_zero(R) == doctest::Approx(lambda0_m2(a)).epsilon(1e-10));
    }
  }
  SUBCASE("positive for the whole sample") {
    for (double a : kSampleA)
      for (int m : kSampleM) CHECK(lambda_zero(build_R(a, m)) > 0.0);
  }
  SUBCASE("bisection output is an eigenvalue (inverse-iteration residual)") {
    for (double a : {0.0, 1.0}) {
      for (int m : {3, 5, 10}) {
        const SquareMatrix R = build_R(a, m);
        const double theta = 0.5 * lambda_zero(R);
        CHECK(testsupport::tridiagonal_eigen_residual(R, theta) <=
              1e-8 * testsupport::max_abs(R));
      }
    }
  }
}

TEST_CASE("torus existence conditions") {
  SUBCASE("zero vortex numbers always pass") {
    for (double a : {0.0, 1.7}) {
      const CouplingMatrix cm = make_coupling_matrix(a, 4);
      const ExistenceCheck chk = check_torus_existence(cm, 0.37, {0, 0, 0, 0}, 2.5);
      CHECK(chk.all_hold);
      for (const auto& c : chk.conditions) {
        CHECK(c.lhs == 0.0);
        CHECK(c.K > 0.0);
      }
    }
  }

  SUBCASE("a=0 m=2 reduces to the explicit pair of inequalities") {
    // Conditions: 4 pi (n1 + (n1+n2)/2) < 2 lambda |Omega| and
    //             2 pi (n1 + n2) < lambda |Omega|.
    const CouplingMatrix cm = make_coupling_matrix(0.0, 2);
    const double lambda = 5.0, area = 1.75;
    const std::vector<int> n = {2, 1};
    const ExistenceCheck chk = check_torus_existence(cm, lambda, n, area);
    const double pi = std::numbers::pi;
    CHECK(chk.conditions[0].lhs == doctest::Approx(4 * pi * (n[0] + 0.5 * (n[0] + n[1]))));
    CHECK(chk.conditions[0].rhs == doctest::Approx(2 * lambda * area));
    CHECK(chk.conditions[1].lhs == doctest::Approx(2 * pi * (n[0] + n[1])));
    CHECK(chk.conditions[1].rhs == doctest::Approx(lambda * area));
  }

  SUBCASE("general-a m=2 matches the cleared-denominator inequalities") {
    for (double a : {0.4, 1.0}) {
      const CouplingMatrix cm = make_coupling_matrix(a, 2);
      const double a2 = a * a;
      const double det = 3 * a2 * a2 + 6 * a2 + 2;
      const double lambda = 6.0, area = 2.0;
      const std::vector<int> n = {1, 2};
      const ExistenceCheck chk = check_torus_existence(cm, lambda, n, area);
      const double pi = std::numbers::pi;
      CHECK(chk.conditions[0].lhs * det ==
            doctest::Approx(4 * pi * ((2 * a2 + 3) * n[0] + (a2 + 1) * n[1])).epsilon(1e-12));
      CHECK(chk.conditions[0].rhs * det ==
            doctest::Approx(lambda * area * (3 * a2 + 4)).epsilon(1e-12));
      CHECK(chk.conditions[1].lhs * det ==
            doctest::Approx(4 * pi * ((a2 + 1) * n[0] + (2 * a2 + 1) * n[1])).epsilon(1e-12));
      CHECK(chk.conditions[1].rhs * det ==
            doctest::Approx(lambda * area * (3 * a2 + 2)).epsilon(1e-12));
    }
  }

  SUBCASE("m=3 general-a structure against the explicit inequalities") {
    for (double a : {0.0, 1.0}) {
      const CouplingMatrix cm = make_coupling_matrix(a, 3);
      const double x = a * a;
      const double det = 4 * x * x * x + 18 * x * x + 22 * x + 6;
      const double lambda = 11.0, area = 1.0;
      const std::vector<int> n = {1, 0, 2};
      const ExistenceCheck chk = check_torus_existence(cm, lambda, n, area);
      const double pi = std::numbers::pi;
      const double lhs1 = 2 * pi *
                          ((3 * x * x + 12 * x + 11) * n[0] + (2 * x * x + 7 * x + 5) * n[1] +
                           (x * x + 3 * x + 2) * n[2]);
      const double rhs1 = lambda * area * (3 * x * x + 11 * x + 9);
      CHECK(chk.conditions[0].lhs * det / 2 == doctest::Approx(lhs1).epsilon(1e-12));
      CHECK(chk.conditions[0].rhs * det / 2 == doctest::Approx(rhs1).epsilon(1e-12));
      CHECK(chk.conditions[0].holds == (lhs1 < rhs1));
    }
  }

  SUBCASE("equality counts as nonexistence") {
    // a=0, m=2, n=(1,0): condition 1 reads 6 pi < 2 lambda |Omega|; at
    // lambda = 3 pi, |Omega| = 1 both sides round to the same double.
    const CouplingMatrix cm = make_coupling_matrix(0.0, 2);
    const ExistenceCheck chk = check_torus_existence(cm, 3.0 * std::numbers::pi, {1, 0}, 1.0);
    CHECK(chk.conditions[0].lhs == chk.conditions[0].rhs);
    CHECK(!chk.conditions[0].holds);
    CHECK(!chk.all_hold);
    CHECK(chk.first_violated() == 1);
  }

  SUBCASE("verdict is monotone in the vortex numbers") {
    Lcg rng(0x5eed001);
    for (int trial = 0; trial < 200; ++trial) {
      const double a = rng.uniform(0.0, 2.0);
      const int m = rng.uniform_int(2, 6);
      const CouplingMatrix cm = make_coupling_matrix(a, m);
      const double lambda = rng.uniform(0.5, 30.0);
      const double area = rng.uniform(0.5, 4.0);
      std::vector<int> n(m);
      for (int i = 0; i < m; ++i) n[i] = rng.uniform_int(0, 3);
      const bool before = check_torus_existence(cm, lambda, n, area).all_hold;
      std::vector<int> bumped = n;
      bumped[rng.uniform_int(0, m - 1)] += 1;
      const bool after = check_torus_existence(cm, lambda, bumped, area).all_hold;
      CHECK(!(after && !before));  // increasing n never flips false -> true
    }
  }

  SUBCASE("length mismatch raises a config error") {
    const CouplingMatrix cm = make_coupling_matrix(0.0, 3);
    CHECK_THROWS_AS(check_torus_existence(cm, 1.0, {1, 0}, 1.0), ConfigError);
  }
}

TEST_CASE("existence threshold closed form") {
  const CouplingMatrix cm = make_coupling_matrix(0.0, 2);
  // n = (1,0), |Omega| = 1: threshold lambda* = 3 pi.
  CHECK(existence_threshold_lambda_area(cm, {1, 0}) ==
        doctest::Approx(3.0 * std::numbers::pi).epsilon(1e-14));
}
