#include "abjm/background.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "abjm/detail/summation.hpp"
#include "abjm/errors.hpp"
#include "abjm/spectral.hpp"

namespace abjm {

namespace {

constexpr double four_pi = 4.0 * std::numbers::pi;

// g_i on the grid for a given nu; shared by the background constructor and
// the nu autotuner.
MultiField planar_g(const VortexConfiguration& cfg, const DiskGrid& grid, double nu) {
  const int m = cfg.species();
  MultiField g(m, grid.n, grid.n, 0.0);
  for (int i = 0; i < m; ++i) {
    double* gi = g.field(i);
    for (const Point& p : cfg.points[i]) {
      for (int iy = 0; iy < grid.n; ++iy) {
        const double dy = grid.y(iy) - p.y;
        for (int ix = 0; ix < grid.n; ++ix) {
          const double dxv = grid.x(ix) - p.x;
          const double d2 = dxv * dxv + dy * dy;
          const double denom = nu + d2;
          gi[grid.idx(ix, iy)] += 4.0 * nu / (denom * denom);
        }
      }
    }
  }
  return g;
}

MultiField planar_h_tilde(const MultiField& g, const CouplingMatrix& cm, double lambda) {
  const int m = g.species();
  MultiField ht(m, g.nx(), g.ny(), 0.0);
  for (int i = 0; i < m; ++i) {
    double* hti = ht.field(i);
    const double inv = 1.0 / (lambda * cm.r[i]);
    for (int j = 0; j < m; ++j) {
      const double c = inv * cm.Rinv(j, i);
      const double* gj = g.field(j);
      for (std::size_t n = 0; n < g.nodes(); ++n) hti[n] += c * gj[n];
    }
  }
  return ht;
}

}  // namespace

PlanarBackground make_planar_background(const VortexConfiguration& cfg, const DiskGrid& grid,
                                        double nu, const CouplingMatrix& cm, double lambda) {
  cfg.validate(cm.m);
  if (!(nu > 0.0)) throw ConfigError("solver.nu: must be > 0");
  if (cfg.max_radius() >= grid.radius)
    throw ConfigError("domain.radius: must strictly exceed the largest vortex |p|");

  const int m = cm.m;
  PlanarBackground bg;
  bg.nu = nu;
  bg.u0 = MultiField(m, grid.n, grid.n, 0.0);
  bg.exp_u0 = MultiField(m, grid.n, grid.n, 1.0);
  bg.g = planar_g(cfg, grid, nu);

  // Half cell diagonal, used only to give u0 a finite reported value at
  // vortex-coincident nodes; exp_u0 is exactly zero there regardless.
  const double eps2 = 0.5 * grid.h * grid.h;

  for (int i = 0; i < m; ++i) {
    double* u0i = bg.u0.field(i);
    double* e0i = bg.exp_u0.field(i);
    for (const Point& p : cfg.points[i]) {
      for (int iy = 0; iy < grid.n; ++iy) {
        const double dy = grid.y(iy) - p.y;
        for (int ix = 0; ix < grid.n; ++ix) {
          const double dxv = grid.x(ix) - p.x;
          const double d2 = dxv * dxv + dy * dy;
          const std::size_t n = grid.idx(ix, iy);
          if (d2 > 0.0) {
            u0i[n] -= std::log1p(nu / d2);
            e0i[n] *= d2 / (d2 + nu);
          } else {
            u0i[n] -= std::log1p(nu / eps2);
            e0i[n] = 0.0;
            ++bg.regularized_nodes;
          }
        }
      }
    }
  }

  // h = (1/lambda) L^{-1} g, applied pointwise across species.
  bg.h = MultiField(m, grid.n, grid.n, 0.0);
  for (int i = 0; i < m; ++i) {
    double* hi = bg.h.field(i);
    for (int j = 0; j <= i; ++j) {
      const double c = cm.Linv(i, j) / lambda;
      if (c == 0.0) continue;
      const double* gj = bg.g.field(j);
      for (std::size_t n = 0; n < bg.g.nodes(); ++n) hi[n] += c * gj[n];
    }
  }

  bg.h_tilde = planar_h_tilde(bg.g, cm, lambda);
  return bg;
}

NuTuneResult autotune_nu(const VortexConfiguration& cfg, const DiskGrid& grid,
                         const CouplingMatrix& cm, double lambda) {
  cfg.validate(cm.m);
  NuTuneResult out;
  double nu = 1.0;
  for (int step = 0; step <= 60; ++step) {
    const MultiField ht = planar_h_tilde(planar_g(cfg, grid, nu), cm, lambda);
    const double sup = ht.sup_norm();
    out.sup_h_tilde.push_back(sup);
    if (sup <= 0.5) {
      out.nu = nu;
      out.doublings = step;
      return out;
    }
    nu *= 2.0;
  }
  throw NonConvergenceError("autotune_nu: sup |h~| stayed above 1/2 after 60 doublings",
                            out.sup_h_tilde);
}

TorusBackground make_torus_background(const VortexConfiguration& cfg, const TorusGrid& grid) {
  const int m = cfg.species();
  if (m < 1) throw ConfigError("vortex: at least one species required");

  TorusBackground bg;
  bg.counts = cfg.counts();
  bg.u0 = MultiField(m, grid.nx, grid.ny, 0.0);
  bg.deltas.resize(m);

  // Snap each vortex to its nearest node, wrapping into the fundamental
  // cell; exact half-way points round toward the lower index.
  for (int i = 0; i < m; ++i) {
    std::vector<double> weight(grid.nodes(), 0.0);
    for (const Point& p : cfg.points[i]) {
      auto snap = [](double coord, double spacing, int count) {
        int idx = static_cast<int>(std::ceil(coord / spacing - 0.5));
        idx %= count;
        if (idx < 0) idx += count;
        return idx;
      };
      const int ix = snap(p.x, grid.dx(), grid.nx);
      const int iy = snap(p.y, grid.dy(), grid.ny);
      weight[grid.idx(ix, iy)] += 1.0;
    }
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int ix = 0; ix < grid.nx; ++ix) {
        const double w = weight[grid.idx(ix, iy)];
        if (w > 0.0) bg.deltas[i].push_back(DeltaNode{ix, iy, w});
      }
  }

  // Lattice Green function: Laplacian_h G = delta_h(0) - 1/|Omega|, zero
  // mean. Each species background is a weighted sum of shifted copies, so
  // commensurate vortex translations shift u0 exactly.
  const bool any = cfg.total() > 0;
  std::vector<double> green;
  if (any) {
    PeriodicSpectral spectral(grid);
    std::vector<double> src(grid.nodes(), -1.0 / grid.area());
    src[0] += 1.0 / grid.cell_area();
    green.resize(grid.nodes());
    spectral.poisson_mean_zero(src.data(), green.data());
  }

  for (int i = 0; i < m; ++i) {
    if (bg.deltas[i].empty()) continue;
    double* u0i = bg.u0.field(i);
    for (int iy = 0; iy < grid.ny; ++iy) {
      for (int ix = 0; ix < grid.nx; ++ix) {
        detail::NeumaierSum s;
        for (const DeltaNode& d : bg.deltas[i]) {
          int sx = ix - d.ix;
          if (sx < 0) sx += grid.nx;
          int sy = iy - d.iy;
          if (sy < 0) sy += grid.ny;
          s.add(d.weight * green[grid.idx(sx, sy)]);
        }
        u0i[grid.idx(ix, iy)] = four_pi * s.value();
      }
    }
  }

  bg.exp_u0 = MultiField(m, grid.nx, grid.ny, 0.0);
  for (std::size_t n = 0; n < bg.u0.size(); ++n) bg.exp_u0.data()[n] = std::exp(bg.u0.data()[n]);

  // Residual of the defining identity, relative to the source magnitude.
  double worst = 0.0;
  const double idx2 = 1.0 / (grid.dx() * grid.dx());
  const double idy2 = 1.0 / (grid.dy() * grid.dy());
  for (int i = 0; i < m; ++i) {
    if (bg.deltas[i].empty()) continue;
    std::vector<double> rhs(grid.nodes(), -four_pi * bg.counts[i] / grid.area());
    for (const DeltaNode& d : bg.deltas[i])
      rhs[grid.idx(d.ix, d.iy)] += four_pi * d.weight / grid.cell_area();
    const double* u = bg.u0.field(i);
    double scale = 0.0, err = 0.0;
    for (int iy = 0; iy < grid.ny; ++iy) {
      const int yp = (iy + 1) % grid.ny, ym = (iy + grid.ny - 1) % grid.ny;
      for (int ix = 0; ix < grid.nx; ++ix) {
        const int xp = (ix + 1) % grid.nx, xm = (ix + grid.nx - 1) % grid.nx;
        const std::size_t c = grid.idx(ix, iy);
        const double lap = idx2 * (u[grid.idx(xp, iy)] - 2.0 * u[c] + u[grid.idx(xm, iy)]) +
                           idy2 * (u[grid.idx(ix, yp)] - 2.0 * u[c] + u[grid.idx(ix, ym)]);
        err = std::max(err, std::abs(lap - rhs[c]));
        scale = std::max(scale, std::abs(rhs[c]));
      }
    }
    if (scale > 0.0) worst = std::max(worst, err / scale);
  }
  bg.source_residual = worst;
  return bg;
}

}  // namespace abjm
