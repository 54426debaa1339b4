#include "abjm/planar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <cstdio>
#include <cstdlib>

#include "abjm/detail/summation.hpp"
#include "abjm/detail/tridiag.hpp"
#include "abjm/errors.hpp"

namespace abjm {

namespace {

constexpr double kExponentGuard = 700.0;

// v = L w applied pointwise: v_i = L_ii w_i + L_{i,i-1} w_{i-1}.
void apply_L(const CouplingMatrix& cm, const MultiField& w, MultiField& v) {
  const int m = cm.m;
  const std::size_t nodes = w.nodes();
  for (int i = 0; i < m; ++i) {
    const double dii = cm.L(i, i);
    const double dlo = (i > 0) ? cm.L(i, i - 1) : 0.0;
    const double* wi = w.field(i);
    const double* wm = (i > 0) ? w.field(i - 1) : nullptr;
    double* vi = v.field(i);
    for (std::size_t n = 0; n < nodes; ++n) vi[n] = dii * wi[n] + (wm ? dlo * wm[n] : 0.0);
  }
}

// Shared evaluation pass: v = Lw, the exponential weights
// D_i = r_i e^{u0_i + v_i}, the functional value, and (optionally) the
// gradient. Returns false if an exponent tripped the overflow guard.
struct Evaluation {
  double value = 0.0;
  bool finite = true;
  MultiField v;      // L w
  MultiField weight; // r_i e^{u0_i + v_i}, Hessian diagonal blocks
  MultiField grad;   // per unit cell area, zero on non-interior nodes
};

bool evaluate(const MultiField& w, const PlanarBackground& bg, const CouplingMatrix& cm,
              const ModelParams& params, const DiskGrid& grid, bool want_grad, Evaluation& out) {
  const int m = cm.m;
  const std::size_t nodes = grid.nodes();
  const double lambda = params.lambda;
  const double cell = grid.cell_area();
  const double inv_h2 = 1.0 / (grid.h * grid.h);

  out.v = MultiField(m, grid.n, grid.n, 0.0);
  apply_L(cm, w, out.v);

  detail::NeumaierSum total;

  // Kinetic part over edges touching the interior.
  for (int i = 0; i < m; ++i) {
    const double* wi = w.field(i);
    detail::NeumaierSum kin;
    for (int iy = 0; iy < grid.n; ++iy) {
      for (int ix = 0; ix < grid.n; ++ix) {
        const std::size_t c = grid.idx(ix, iy);
        if (ix + 1 < grid.n) {
          const std::size_t rgt = c + 1;
          if (grid.interior[c] || grid.interior[rgt]) {
            const double d = wi[rgt] - wi[c];
            kin.add(d * d);
          }
        }
        if (iy + 1 < grid.n) {
          const std::size_t top = c + grid.n;
          if (grid.interior[c] || grid.interior[top]) {
            const double d = wi[top] - wi[c];
            kin.add(d * d);
          }
        }
      }
    }
    total.add(kin.value() * inv_h2 * cell / (2.0 * lambda));
  }

  // Potential part over interior nodes; exp weights cached for the Hessian.
  out.weight = MultiField(m, grid.n, grid.n, 0.0);
  bool finite = true;
  for (int i = 0; i < m; ++i) {
    const double ri = cm.r[i];
    const double* vi = out.v.field(i);
    const double* e0 = bg.exp_u0.field(i);
    const double* hi = bg.h.field(i);
    const double* wi = w.field(i);
    double* di = out.weight.field(i);
    detail::NeumaierSum pot;
    for (std::size_t n = 0; n < nodes; ++n) {
      if (!grid.interior[n]) continue;
      const double v = vi[n];
      if (v > kExponentGuard) {
        finite = false;
        break;
      }
      const double ev = e0[n] * std::exp(v);
      di[n] = ri * ev;
      pot.add(hi[n] * wi[n] + ri * (ev - e0[n] - v));
    }
    if (!finite) break;
    total.add(pot.value() * cell);
  }

  out.finite = finite;
  out.value = finite ? total.value() : std::numeric_limits<double>::infinity();
  if (!finite || !want_grad) return finite;

  // grad_i = -(1/lambda) Lap_h w_i + h_i + sum_k L_ki r_k (e^{u0_k+v_k} - 1),
  // the sum running over k in {i, i+1}.
  out.grad = MultiField(m, grid.n, grid.n, 0.0);
  for (int i = 0; i < m; ++i) {
    const double* wi = w.field(i);
    const double* hi = bg.h.field(i);
    const double lii = cm.L(i, i);
    const double lup = (i + 1 < m) ? cm.L(i + 1, i) : 0.0;
    const double ri = cm.r[i];
    const double rup = (i + 1 < m) ? cm.r[i + 1] : 0.0;
    const double* vi = out.v.field(i);
    const double* e0i = bg.exp_u0.field(i);
    const double* vup = (i + 1 < m) ? out.v.field(i + 1) : nullptr;
    const double* e0up = (i + 1 < m) ? bg.exp_u0.field(i + 1) : nullptr;
    double* gi = out.grad.field(i);
    for (int iy = 0; iy < grid.n; ++iy) {
      for (int ix = 0; ix < grid.n; ++ix) {
        const std::size_t c = grid.idx(ix, iy);
        if (!grid.interior[c]) continue;
        const double lap = inv_h2 * (wi[c - 1] + wi[c + 1] + wi[c - grid.n] + wi[c + grid.n] -
                                     4.0 * wi[c]);
        double g = -lap / lambda + hi[c];
        g += lii * ri * (e0i[c] * std::exp(vi[c]) - 1.0);
        if (vup) g += lup * rup * (e0up[c] * std::exp(vup[c]) - 1.0);
        gi[c] = g;
      }
    }
  }
  return true;
}

// Newton-system matvec: (Hp)_i = (1/lambda)(-Lap_h p_i) + (L^T D L p)_i
// on interior nodes, with p = 0 outside.
void hessian_apply(const MultiField& p, const MultiField& weight, const CouplingMatrix& cm,
                   double lambda, const DiskGrid& grid, MultiField& out, MultiField& scratch) {
  const int m = cm.m;
  const double inv_h2 = 1.0 / (grid.h * grid.h);
  apply_L(cm, p, scratch);  // scratch = L p
  for (int i = 0; i < m; ++i) {
    const double* pi = p.field(i);
    const double lii = cm.L(i, i);
    const double lup = (i + 1 < m) ? cm.L(i + 1, i) : 0.0;
    const double* qi = scratch.field(i);
    const double* qup = (i + 1 < m) ? scratch.field(i + 1) : nullptr;
    const double* di = weight.field(i);
    const double* dup = (i + 1 < m) ? weight.field(i + 1) : nullptr;
    double* oi = out.field(i);
    for (int iy = 0; iy < grid.n; ++iy) {
      for (int ix = 0; ix < grid.n; ++ix) {
        const std::size_t c = grid.idx(ix, iy);
        if (!grid.interior[c]) {
          oi[c] = 0.0;
          continue;
        }
        const double lap = inv_h2 * (pi[c - 1] + pi[c + 1] + pi[c - grid.n] + pi[c + grid.n] -
                                     4.0 * pi[c]);
        double val = -lap / lambda + lii * di[c] * qi[c];
        if (qup) val += lup * dup[c] * qup[c];
        oi[c] = val;
      }
    }
  }
}

// Per-node block-Jacobi preconditioner: the m-by-m species block
// (4/(lambda h^2)) I + L^T D(n) L, factored once per Newton step.
struct BlockJacobi {
  int m = 0;
  std::size_t nodes = 0;
  std::vector<double> l, s;  // factor arrays, species-major per node

  void build(const MultiField& weight, const CouplingMatrix& cm, double lambda,
             const DiskGrid& grid) {
    m = cm.m;
    nodes = grid.nodes();
    l.assign(nodes * m, 1.0);
    s.assign(nodes * (m - 1), 0.0);
    const double lap_diag = 4.0 / (grid.h * grid.h * lambda);
    std::vector<double> diag(m), sub(m - 1), lf(m), sf(std::max(m - 1, 1));
    for (std::size_t n = 0; n < nodes; ++n) {
      if (!grid.interior[n]) continue;
      for (int i = 0; i < m; ++i) {
        double d = lap_diag + cm.L(i, i) * cm.L(i, i) * weight.field(i)[n];
        if (i + 1 < m) {
          d += cm.L(i + 1, i) * cm.L(i + 1, i) * weight.field(i + 1)[n];
          sub[i] = cm.L(i + 1, i) * cm.L(i + 1, i + 1) * weight.field(i + 1)[n];
        }
        diag[i] = d;
      }
      detail::tri_cholesky_factor(m, diag.data(), sub.data(), lf.data(), sf.data());
      for (int i = 0; i < m; ++i) l[n * m + i] = lf[i];
      for (int i = 0; i + 1 < m; ++i) s[n * (m - 1) + i] = sf[i];
    }
  }

  void apply(const MultiField& r, const DiskGrid& grid, MultiField& z) const {
    std::vector<double> x(m);
    for (std::size_t n = 0; n < nodes; ++n) {
      if (!grid.interior[n]) {
        for (int i = 0; i < m; ++i) z.field(i)[n] = 0.0;
        continue;
      }
      for (int i = 0; i < m; ++i) x[i] = r.field(i)[n];
      detail::tri_cholesky_solve(m, &l[n * m], &s[n * (m - 1)], x.data());
      for (int i = 0; i < m; ++i) z.field(i)[n] = x[i];
    }
  }
};

}  // namespace

DiskGrid auto_disk_grid(const ModelParams& params, const CouplingMatrix& cm,
                        const VortexConfiguration& cfg, double nu) {
  const double rate = std::sqrt(params.lambda * cm.lambda0);
  const double radius =
      std::max({20.0 / rate, 3.0 * cfg.max_radius(), 5.0 * std::sqrt(nu)});
  const double target_h = 0.2 / rate;
  int half = static_cast<int>(std::ceil(radius / target_h));
  half = std::max(half, 8);
  return DiskGrid::make(radius, 2 * half + 1);
}

MultiField planar_boundary_values(const PlanarBackground& bg, const CouplingMatrix& cm,
                                  PlanarBoundary kind, const DiskGrid& grid) {
  MultiField wb(cm.m, grid.n, grid.n, 0.0);
  if (kind == PlanarBoundary::Zero) return wb;
  // u_i = ln r_i on the boundary ring: v = -u0 there, w = L^{-1} v.
  for (int i = 0; i < cm.m; ++i) {
    double* wi = wb.field(i);
    for (std::size_t n = 0; n < grid.nodes(); ++n) {
      if (grid.interior[n]) continue;
      double acc = 0.0;
      for (int j = 0; j <= i; ++j) acc += cm.Linv(i, j) * (-bg.u0.field(j)[n]);
      wi[n] = acc;
    }
  }
  return wb;
}

double planar_functional(const MultiField& w, const PlanarBackground& bg,
                         const CouplingMatrix& cm, const ModelParams& params,
                         const DiskGrid& grid) {
  Evaluation ev;
  if (!evaluate(w, bg, cm, params, grid, /*want_grad=*/false, ev))
    throw DivergedIterateError("planar_functional: exponent exceeded 700");
  return ev.value;
}

MultiField planar_gradient(const MultiField& w, const PlanarBackground& bg,
                           const CouplingMatrix& cm, const ModelParams& params,
                           const DiskGrid& grid) {
  Evaluation ev;
  if (!evaluate(w, bg, cm, params, grid, /*want_grad=*/true, ev))
    throw DivergedIterateError("planar_gradient: exponent exceeded 700");
  return ev.grad;
}

FieldState solve_planar(const VortexConfiguration& cfg, const ModelParams& params,
                        const DiskGrid& grid, const CouplingMatrix& cm,
                        const PlanarBackground& bg, const PlanarOptions& opts) {
  cfg.validate(cm.m);
  if (cfg.max_radius() >= grid.radius)
    throw ConfigError("domain.radius: must strictly exceed the largest vortex |p|");

  const int m = cm.m;
  const double lambda = params.lambda;
  const double cell = grid.cell_area();
  const double stop_scale = std::max(1.0, lambda);

  MultiField w = planar_boundary_values(bg, cm, opts.boundary, grid);
  if (opts.initial_w) {
    for (int i = 0; i < m; ++i) {
      const double* src = opts.initial_w->field(i);
      double* dst = w.field(i);
      for (std::size_t n = 0; n < grid.nodes(); ++n)
        if (grid.interior[n]) dst[n] = src[n];
    }
  }

  Evaluation ev;
  if (!evaluate(w, bg, cm, params, grid, true, ev))
    throw DivergedIterateError("solve_planar: initial iterate overflows");

  FieldState st;
  st.domain = DomainKind::Disk;
  BlockJacobi jacobi;

  MultiField delta(m, grid.n, grid.n), resid(m, grid.n, grid.n), z(m, grid.n, grid.n),
      p(m, grid.n, grid.n), Ap(m, grid.n, grid.n), scratch(m, grid.n, grid.n),
      trial(m, grid.n, grid.n), prev_dir(m, grid.n, grid.n), prev_grad(m, grid.n, grid.n);
  bool have_prev_cg = false;

  int iter = 0;
  for (;; ++iter) {
    const double gsup = ev.grad.sup_norm();
    st.residual_history.push_back(lambda * gsup);
    st.functional_history.push_back(ev.value);
    if (gsup * stop_scale <= opts.tol) {
      st.converged = true;
      break;
    }
    if (iter >= opts.max_iter)
      throw NonConvergenceError("solve_planar: iteration cap (" + std::to_string(opts.max_iter) +
                                    ") exceeded",
                                st.residual_history);

    jacobi.build(ev.weight, cm, lambda, grid);

    // Newton direction by preconditioned CG on H delta = -grad.
    delta.fill(0.0);
    resid = ev.grad;
    resid.scale(-1.0);
    jacobi.apply(resid, grid, z);
    p = z;
    double rz = resid.dot(z);
    const double b_norm = std::sqrt(resid.dot(resid));
    const double cg_tol = std::min(0.1, std::sqrt(gsup)) * b_norm;
    for (int cg = 0; cg < 2000 && b_norm > 0.0; ++cg) {
      hessian_apply(p, ev.weight, cm, lambda, grid, Ap, scratch);
      const double pAp = p.dot(Ap);
      if (!(pAp > 0.0)) break;
      const double alpha = rz / pAp;
      delta.axpy(alpha, p);
      resid.axpy(-alpha, Ap);
      if (std::sqrt(resid.dot(resid)) <= cg_tol) break;
      jacobi.apply(resid, grid, z);
      const double rz_new = resid.dot(z);
      const double beta = rz_new / rz;
      rz = rz_new;
      p.scale(beta);
      p.axpy(1.0, z);
    }

    auto try_direction = [&](const MultiField& dir, double dd) -> double {
      // Armijo backtracking; returns accepted step or 0.
      double t = 1.0;
      for (int back = 0; back < 60; ++back) {
        trial = w;
        trial.axpy(t, dir);
        Evaluation cand;
        evaluate(trial, bg, cm, params, grid, false, cand);
        if (cand.finite && cand.value <= ev.value + 1e-4 * t * dd) return t;
        t *= 0.5;
      }
      return 0.0;
    };

    double dd = ev.grad.dot(delta) * cell;
    if (std::getenv("ABJM_DEBUG"))
      std::fprintf(stderr, "it %d gsup %.3e dsup %.3e dd %.3e I %.17g\n", iter, gsup,
                   delta.sup_norm(), dd, ev.value);
    double step = (dd < 0.0) ? try_direction(delta, dd) : 0.0;
    if (std::getenv("ABJM_DEBUG")) std::fprintf(stderr, "   newton step t=%.3e\n", step);

    if (step == 0.0) {
      // Newton step rejected: preconditioned nonlinear CG direction.
      jacobi.apply(ev.grad, grid, z);
      MultiField dir = z;
      dir.scale(-1.0);
      if (have_prev_cg) {
        // Polak-Ribiere+ with the preconditioned gradient.
        MultiField diff = ev.grad;
        diff.axpy(-1.0, prev_grad);
        const double denom = prev_grad.dot(prev_dir);
        double beta = (denom != 0.0) ? std::max(0.0, z.dot(diff) / std::abs(denom)) : 0.0;
        dir.axpy(beta, prev_dir);
      }
      dd = ev.grad.dot(dir) * cell;
      if (dd >= 0.0) {
        dir = z;
        dir.scale(-1.0);
        dd = ev.grad.dot(dir) * cell;
      }
      step = try_direction(dir, dd);
      if (step == 0.0)
        throw NonConvergenceError("solve_planar: line search failed", st.residual_history);
      prev_dir = dir;
      prev_grad = ev.grad;
      have_prev_cg = true;
      w.axpy(step, dir);
    } else {
      have_prev_cg = false;
      w.axpy(step, delta);
    }

    if (!evaluate(w, bg, cm, params, grid, true, ev))
      throw DivergedIterateError("solve_planar: accepted iterate overflows");
  }

  st.iterations = iter;
  st.gradient_sup = ev.grad.sup_norm();
  st.residual_sup = lambda * st.gradient_sup;
  st.functional_value = ev.value;
  st.w = std::move(w);
  st.v = std::move(ev.v);

  // u_i = u0_i + ln r_i + v_i; exp_u built from exp_u0 so vortex nodes are
  // exactly zero.
  st.u = MultiField(m, grid.n, grid.n, 0.0);
  st.exp_u = MultiField(m, grid.n, grid.n, 0.0);
  for (int i = 0; i < m; ++i) {
    const double lnr = std::log(cm.r[i]);
    const double* u0 = bg.u0.field(i);
    const double* e0 = bg.exp_u0.field(i);
    const double* vi = st.v.field(i);
    double* ui = st.u.field(i);
    double* ei = st.exp_u.field(i);
    for (std::size_t n = 0; n < grid.nodes(); ++n) {
      ui[n] = u0[n] + lnr + vi[n];
      ei[n] = e0[n] * cm.r[i] * std::exp(vi[n]);
    }
  }
  return st;
}

DecayFit decay_fit(const FieldState& state, const CouplingMatrix& cm, const ModelParams& params,
                   const DiskGrid& grid) {
  DecayFit fit;
  fit.reference = std::sqrt(params.lambda * cm.lambda0);

  const double lo = 0.5 * grid.radius;
  const double hi = 0.9 * grid.radius;

  double smax = 0.0;
  std::vector<double> rs, ls;
  for (int iy = 0; iy < grid.n; ++iy) {
    for (int ix = 0; ix < grid.n; ++ix) {
      const std::size_t n = grid.idx(ix, iy);
      if (!grid.interior[n]) continue;
      const double rho = std::hypot(grid.x(ix), grid.y(iy));
      if (rho < lo || rho > hi) continue;
      double s = 0.0;
      for (int i = 0; i < cm.m; ++i) {
        const double dev = state.u.field(i)[n] - std::log(cm.r[i]);
        s += dev * dev;
      }
      smax = std::max(smax, s);
      if (s > 0.0) {
        rs.push_back(rho);
        ls.push_back(std::log(s));
      }
    }
  }

  if (smax == 0.0) {
    fit.skipped = true;
    fit.pass = true;  // deviation identically zero; nothing to fit
    return fit;
  }
  if (smax <= 1e-28 || rs.size() < 8) {
    fit.degenerate = true;  // rate unresolvable at this precision
    return fit;
  }

  // Least squares ln S = alpha + beta |x|.
  detail::NeumaierSum sx, sy, sxx, sxy;
  for (std::size_t k = 0; k < rs.size(); ++k) {
    sx.add(rs[k]);
    sy.add(ls[k]);
    sxx.add(rs[k] * rs[k]);
    sxy.add(rs[k] * ls[k]);
  }
  const double npts = static_cast<double>(rs.size());
  const double beta =
      (npts * sxy.value() - sx.value() * sy.value()) / (npts * sxx.value() - sx.value() * sx.value());
  fit.sigma_fit = -beta;
  fit.samples = static_cast<int>(rs.size());
  fit.pass = fit.sigma_fit >= 0.85 * fit.reference;
  return fit;
}

}  // namespace abjm
