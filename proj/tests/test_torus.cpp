#include <doctest.h>

#include <cmath>
#include <numbers>

#include "abjm/background.hpp"
#include "abjm/coupling.hpp"
#include "abjm/diagnostics.hpp"
#include "abjm/errors.hpp"
#include "abjm/torus.hpp"
#include "test_support.hpp"

using namespace abjm;
using testsupport::Lcg;

namespace {

VortexConfiguration one_vortex(int m, double x, double y) {
  VortexConfiguration cfg = VortexConfiguration::none(m);
  cfg.points[0].push_back({x, y});
  return cfg;
}

}  // namespace

TEST_CASE("torus functional: constant-field reduction and stationarity at ln r") {
  ModelParams params;
  params.m = 2;
  params.a = 0.0;
  params.lambda = 4.0;
  const CouplingMatrix cm = make_coupling_matrix(params.a, params.m);
  const TorusGrid grid = TorusGrid::make(2.0, 2.0, 32, 32);
  const VortexConfiguration cfg = VortexConfiguration::none(2);
  const TorusBackground bg = make_torus_background(cfg, grid);

  // For v = const c (so w = L^{-1} c) the functional reduces to
  // |Omega| (sum_i e^{c_i} - sum_i r_i c_i).
  auto constant_w = [&](double c0, double c1) {
    MultiField w(2, grid.nx, grid.ny, 0.0);
    const double w0 = c0 / cm.L(0, 0);
    const double w1 = (c1 - cm.L(1, 0) * w0) / cm.L(1, 1);
    for (std::size_t n = 0; n < grid.nodes(); ++n) {
      w.field(0)[n] = w0;
      w.field(1)[n] = w1;
    }
    return w;
  };
  auto closed_form = [&](double c0, double c1) {
    return grid.area() *
           (std::exp(c0) + std::exp(c1) - cm.r[0] * c0 - cm.r[1] * c1);
  };

  for (double c0 : {-0.4, 0.2}) {
    for (double c1 : {0.3, 0.9}) {
      const double val = torus_functional(constant_w(c0, c1), bg, cm, params, grid);
      CHECK(val == doctest::Approx(closed_form(c0, c1)).epsilon(1e-12));
    }
  }

  // Stationary exactly at v = ln r.
  const MultiField w_star = constant_w(std::log(cm.r[0]), std::log(cm.r[1]));
  const MultiField g = torus_gradient(w_star, bg, cm, params, grid);
  CHECK(g.sup_norm() <= 1e-13);
}

TEST_CASE("torus gradient agrees with central finite differences") {
  ModelParams params;
  params.m = 3;
  params.a = 0.3;
  params.lambda = 6.0;
  const CouplingMatrix cm = make_coupling_matrix(params.a, params.m);
  const TorusGrid grid = TorusGrid::make(1.0, 1.0, 32, 32);
  VortexConfiguration cfg = VortexConfiguration::none(3);
  cfg.points[0].push_back({0.3, 0.7});
  cfg.points[1].push_back({0.6, 0.2});
  const TorusBackground bg = make_torus_background(cfg, grid);

  Lcg rng(0xfeed02);
  MultiField w(3, grid.nx, grid.ny, 0.0);
  testsupport::fill_random(w, rng, -0.5, 0.5);

  const MultiField g = torus_gradient(w, bg, cm, params, grid);
  const double cell = grid.cell_area();
  for (int check = 0; check < 25; ++check) {
    const int i = rng.uniform_int(0, 2);
    const std::size_t node = grid.idx(rng.uniform_int(0, grid.nx - 1),
                                      rng.uniform_int(0, grid.ny - 1));
    const double eps = 1e-3;
    const double keep = w.field(i)[node];
    w.field(i)[node] = keep + eps;
    const double fp = torus_functional(w, bg, cm, params, grid);
    w.field(i)[node] = keep - eps;
    const double fm = torus_functional(w, bg, cm, params, grid);
    w.field(i)[node] = keep;
    const double fd = (fp - fm) / (2.0 * eps);
    const double analytic = g.field(i)[node] * cell;
    CHECK(std::abs(fd - analytic) <= 1e-6 * std::max(std::abs(analytic), 1e-8));
  }
}

TEST_CASE("torus functional is strictly convex along random segments") {
  ModelParams params;
  params.m = 2;
  params.a = 1.0;
  params.lambda = 4.0;
  const CouplingMatrix cm = make_coupling_matrix(params.a, params.m);
  const TorusGrid grid = TorusGrid::make(1.0, 1.0, 32, 32);
  VortexConfiguration cfg = one_vortex(2, 0.5, 0.5);
  const TorusBackground bg = make_torus_background(cfg, grid);

  Lcg rng(0xc0ffee);
  for (int trial = 0; trial < 4; ++trial) {
    MultiField w1(2, grid.nx, grid.ny, 0.0), w2(2, grid.nx, grid.ny, 0.0);
    testsupport::fill_random(w1, rng, -1.0, 1.0);
    testsupport::fill_random(w2, rng, -1.0, 1.0);
    MultiField mid = w1;
    mid.axpy(1.0, w2);
    mid.scale(0.5);
    const double f1 = torus_functional(w1, bg, cm, params, grid);
    const double f2 = torus_functional(w2, bg, cm, params, grid);
    const double fm = torus_functional(mid, bg, cm, params, grid);
    CHECK(fm < 0.5 * (f1 + f2));
  }
}

TEST_CASE("vortex-free torus solve is exact at the start") {
  ModelParams params;
  params.m = 2;
  params.a = 1.0;
  params.lambda = 4.0;
  const CouplingMatrix cm = make_coupling_matrix(params.a, params.m);
  const TorusGrid grid = TorusGrid::make(1.5, 1.0, 32, 32);
  const VortexConfiguration cfg = VortexConfiguration::none(2);
  const TorusBackground bg = make_torus_background(cfg, grid);

  const TorusSolveResult res = solve_torus(cfg, params, grid, cm, bg);
  CHECK(res.state.converged);
  CHECK(res.state.iterations <= 2);
  CHECK(res.state.residual_sup <= 1e-10);
  for (int i = 0; i < 2; ++i) {
    const double lnr = std::log(cm.r[i]);
    for (std::size_t n = 0; n < grid.nodes(); ++n) {
      CHECK(std::abs(res.state.u.field(i)[n] - lnr) <= 1e-13);
      CHECK(std::abs(res.state.w.field(i)[n]) <= 1e-13);  // normalized variables
    }
    // int e^{u_i} = r_i |Omega| exactly (machine precision).
    CHECK(res.report.constraint_integral[i] ==
          doctest::Approx(cm.r[i] * grid.area()).epsilon(1e-13));
  }
}

TEST_CASE("feasible torus solve: constraints, quantized integrals, solvability") {
  ModelParams params;
  params.m = 2;
  params.a = 0.0;
  params.lambda = 4.0;
  const CouplingMatrix cm = make_coupling_matrix(params.a, params.m);
  const TorusGrid grid = TorusGrid::make(2.0, 2.0, 128, 128);
  const VortexConfiguration cfg = one_vortex(2, 0.5, 0.5);
  const TorusBackground bg = make_torus_background(cfg, grid);

  const TorusSolveResult res = solve_torus(cfg, params, grid, cm, bg);
  REQUIRE(res.state.converged);

  SUBCASE("constraint residuals far below the 1% contract") {
    for (int i = 0; i < 2; ++i) CHECK(res.report.constraint_residual[i] < 1e-2);
    for (int i = 0; i < 2; ++i) CHECK(res.report.constraint_residual[i] < 1e-10);
  }

  SUBCASE("quantized integrals hit the targets") {
    const auto qi = quantized_integrals(res.state, cm, params, bg.counts, grid);
    const double scale = 4.0 * std::numbers::pi / params.lambda;
    for (int i = 0; i < 2; ++i)
      CHECK(std::abs(qi[i].computed - qi[i].target) <=
            0.01 * std::max(std::abs(qi[i].target), scale));
  }

  SUBCASE("discrete solvability: the source of each equation sums to zero") {
    // mean of lambda (R U - 1) + 4 pi n_i / |Omega| vanishes at convergence.
    for (int i = 0; i < 2; ++i) {
      double sum = 0.0;
      for (std::size_t n = 0; n < grid.nodes(); ++n) {
        double val = -1.0;
        for (int j = 0; j < 2; ++j) val += cm.R(i, j) * res.state.exp_u.field(j)[n];
        sum += params.lambda * val;
      }
      sum = sum * grid.cell_area() + 4.0 * std::numbers::pi * bg.counts[i];
      CHECK(std::abs(sum) <= 1e-8);
    }
  }

  SUBCASE("monotone descent") {
    for (std::size_t k = 1; k < res.state.functional_history.size(); ++k)
      CHECK(res.state.functional_history[k] < res.state.functional_history[k - 1]);
  }
}

TEST_CASE("nonexistence certificate below the threshold") {
  ModelParams params;
  params.m = 2;
  params.a = 0.0;
  const CouplingMatrix cm = make_coupling_matrix(params.a, params.m);
  const TorusGrid grid = TorusGrid::make(1.0, 1.0, 32, 32);
  const VortexConfiguration cfg = one_vortex(2, 0.5, 0.5);
  const TorusBackground bg = make_torus_background(cfg, grid);

  const double threshold = existence_threshold_lambda_area(cm, bg.counts) / grid.area();
  params.lambda = 0.99 * threshold;

  const TorusSolveResult res = solve_torus(cfg, params, grid, cm, bg);
  CHECK(res.report.nonexistent);
  CHECK(!res.state.converged);
  CHECK(res.state.iterations == 0);
  CHECK(res.report.existence.first_violated() == 1);
  CHECK(res.report.K[0] <= 0.0);
}

TEST_CASE("direct and constrained minimizers agree within 10x tol") {
  ModelParams params;
  params.m = 2;
  params.a = 1.0;
  params.lambda = 4.0;
  const CouplingMatrix cm = make_coupling_matrix(params.a, params.m);
  const TorusGrid grid = TorusGrid::make(2.0, 2.0, 64, 64);
  VortexConfiguration cfg = VortexConfiguration::none(2);
  cfg.points[0].push_back({0.5, 0.5});
  cfg.points[1].push_back({1.5, 1.0});
  const TorusBackground bg = make_torus_background(cfg, grid);

  TorusOptions opts;
  const TorusSolveResult direct = solve_torus(cfg, params, grid, cm, bg, opts);
  const TorusSolveResult constrained = constrained_solve_torus(cfg, params, grid, cm, bg, opts);
  REQUIRE(direct.state.converged);
  REQUIRE(constrained.state.converged);

  double diff = 0.0;
  for (int i = 0; i < 2; ++i)
    for (std::size_t n = 0; n < grid.nodes(); ++n)
      diff = std::max(diff,
                      std::abs(direct.state.u.field(i)[n] - constrained.state.u.field(i)[n]));
  CHECK(diff <= 10.0 * opts.tol);

  // Constraints hold essentially exactly on the constrained route.
  for (int i = 0; i < 2; ++i) CHECK(constrained.report.constraint_residual[i] <= 1e-12);
}

TEST_CASE("vortex-free constrained route returns the same constant solution") {
  ModelParams params;
  params.m = 2;
  params.a = 0.5;
  params.lambda = 4.0;
  const CouplingMatrix cm = make_coupling_matrix(params.a, params.m);
  const TorusGrid grid = TorusGrid::make(1.0, 1.0, 32, 32);
  const VortexConfiguration cfg = VortexConfiguration::none(2);
  const TorusBackground bg = make_torus_background(cfg, grid);
  const TorusSolveResult res = constrained_solve_torus(cfg, params, grid, cm, bg);
  CHECK(res.state.converged);
  CHECK(res.state.iterations <= 2);
  for (int i = 0; i < 2; ++i)
    for (std::size_t n = 0; n < grid.nodes(); ++n)
      CHECK(std::abs(res.state.u.field(i)[n] - std::log(cm.r[i])) <= 1e-12);
}

TEST_CASE("threshold scan flips exactly once at the closed-form threshold") {
  ModelParams params;
  params.m = 2;
  params.a = 0.0;
  params.lambda = 4.0;  // replaced per row
  const CouplingMatrix cm = make_coupling_matrix(params.a, params.m);
  const TorusGrid grid = TorusGrid::make(1.0, 1.0, 64, 64);
  const VortexConfiguration cfg = one_vortex(2, 0.5, 0.5);
  const TorusBackground bg = make_torus_background(cfg, grid);

  const double star = existence_threshold_lambda_area(cm, bg.counts) / grid.area();
  CHECK(star == doctest::Approx(3.0 * std::numbers::pi).epsilon(1e-13));

  std::vector<double> lambdas;
  for (int k = 0; k <= 10; ++k) lambdas.push_back(9.0 + 0.1 * k);  // straddles 3 pi
  const auto rows = threshold_scan(cfg, params, grid, cm, bg, lambdas);

  int flips = 0;
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].feasible != rows[k - 1].feasible) ++flips;
  CHECK(flips == 1);
  for (const auto& row : rows) {
    CHECK(row.feasible == (row.value > star));
    if (!row.feasible) {
      CHECK(row.iterations == 0);  // gated: no solve data on infeasible rows
      CHECK(row.constraint_residual.empty());
    } else {
      CHECK(row.error.empty());
      for (double resid : row.constraint_residual) CHECK(resid < 1e-8);
    }
  }
}

TEST_CASE("translation equivariance for lattice-commensurate shifts") {
  ModelParams params;
  params.m = 2;
  params.a = 0.0;
  params.lambda = 4.0;
  const CouplingMatrix cm = make_coupling_matrix(params.a, params.m);
  const TorusGrid grid = TorusGrid::make(2.0, 2.0, 64, 64);
  const double sx = 9 * grid.dx(), sy = 5 * grid.dy();

  VortexConfiguration base = one_vortex(2, 0.5, 0.75);
  VortexConfiguration shifted = one_vortex(2, 0.5 + sx, 0.75 + sy);

  const TorusBackground bg_a = make_torus_background(base, grid);
  const TorusBackground bg_b = make_torus_background(shifted, grid);

  // Background shift-equivariance is exact by construction.
  for (std::size_t iy = 0; iy < static_cast<std::size_t>(grid.ny); ++iy)
    for (std::size_t ix = 0; ix < static_cast<std::size_t>(grid.nx); ++ix) {
      const std::size_t from = grid.idx(static_cast<int>(ix), static_cast<int>(iy));
      const std::size_t to = grid.idx(static_cast<int>((ix + 9) % grid.nx),
                                      static_cast<int>((iy + 5) % grid.ny));
      CHECK(bg_a.u0.field(0)[from] == bg_b.u0.field(0)[to]);
    }

  const TorusSolveResult ra = solve_torus(base, params, grid, cm, bg_a);
  const TorusSolveResult rb = solve_torus(shifted, params, grid, cm, bg_b);
  REQUIRE(ra.state.converged);
  REQUIRE(rb.state.converged);
  double diff = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int ix = 0; ix < grid.nx; ++ix) {
        const std::size_t from = grid.idx(ix, iy);
        const std::size_t to = grid.idx((ix + 9) % grid.nx, (iy + 5) % grid.ny);
        diff = std::max(diff,
                        std::abs(ra.state.u.field(i)[from] - rb.state.u.field(i)[to]));
      }
  CHECK(diff <= 1e-9);
}

TEST_CASE("quantized-integral exactness persists under refinement") {
  ModelParams params;
  params.m = 2;
  params.a = 1.0;
  params.lambda = 6.0;
  const CouplingMatrix cm = make_coupling_matrix(params.a, params.m);
  const VortexConfiguration cfg = one_vortex(2, 0.5, 0.5);

  auto max_err = [&](int n) {
    const TorusGrid grid = TorusGrid::make(2.0, 2.0, n, n);
    const TorusBackground bg = make_torus_background(cfg, grid);
    const TorusSolveResult res = solve_torus(cfg, params, grid, cm, bg);
    const auto qi = quantized_integrals(res.state, cm, params, bg.counts, grid);
    double err = 0.0;
    for (const auto& q : qi) err = std::max(err, std::abs(q.computed - q.target));
    return err;
  };

  // The discrete-delta construction keeps these exact at machine precision,
  // so refinement can only move them within the noise floor.
  const double coarse = max_err(64);
  const double fine = max_err(128);
  CHECK(coarse <= 1e-9);
  CHECK(fine <= 1e-9);
}
