#include "abjm/torus.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "abjm/detail/summation.hpp"
#include "abjm/detail/tridiag.hpp"
#include "abjm/errors.hpp"
#include "abjm/spectral.hpp"

namespace abjm {

namespace {

constexpr double kExponentGuard = 700.0;
constexpr double four_pi = 4.0 * std::numbers::pi;

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

void periodic_neg_laplacian(const double* w, const TorusGrid& g, double* out) {
  const double idx2 = 1.0 / (g.dx() * g.dx());
  const double idy2 = 1.0 / (g.dy() * g.dy());
  for (int iy = 0; iy < g.ny; ++iy) {
    const int yp = (iy + 1) % g.ny, ym = (iy + g.ny - 1) % g.ny;
    for (int ix = 0; ix < g.nx; ++ix) {
      const int xp = (ix + 1) % g.nx, xm = (ix + g.nx - 1) % g.nx;
      const std::size_t c = g.idx(ix, iy);
      out[c] = -(idx2 * (w[g.idx(xp, iy)] - 2.0 * w[c] + w[g.idx(xm, iy)]) +
                 idy2 * (w[g.idx(ix, yp)] - 2.0 * w[c] + w[g.idx(ix, ym)]));
    }
  }
}

struct Evaluation {
  double value = 0.0;
  bool finite = true;
  MultiField v;  // L w
  MultiField U;  // e^{u0_i + v_i}; also the Hessian block diagonal
  MultiField grad;
};

bool evaluate(const MultiField& w, const TorusBackground& bg, const CouplingMatrix& cm,
              const ModelParams& params, const TorusGrid& grid, const std::vector<double>& b,
              bool want_grad, Evaluation& out) {
  const int m = cm.m;
  const std::size_t nodes = grid.nodes();
  const double lambda = params.lambda;
  const double cell = grid.cell_area();

  out.v = MultiField(m, grid.nx, grid.ny, 0.0);
  apply_L(cm, w, out.v);

  detail::NeumaierSum total;
  const double idx2 = 1.0 / (grid.dx() * grid.dx());
  const double idy2 = 1.0 / (grid.dy() * grid.dy());
  for (int i = 0; i < m; ++i) {
    const double* wi = w.field(i);
    detail::NeumaierSum kin;
    for (int iy = 0; iy < grid.ny; ++iy) {
      const int yp = (iy + 1) % grid.ny;
      for (int ix = 0; ix < grid.nx; ++ix) {
        const int xp = (ix + 1) % grid.nx;
        const std::size_t c = grid.idx(ix, iy);
        const double dxv = wi[grid.idx(xp, iy)] - wi[c];
        const double dyv = wi[grid.idx(ix, yp)] - wi[c];
        kin.add(idx2 * dxv * dxv + idy2 * dyv * dyv);
      }
    }
    total.add(kin.value() * cell / (2.0 * lambda));
  }

  out.U = MultiField(m, grid.nx, grid.ny, 0.0);
  bool finite = true;
  for (int i = 0; i < m && finite; ++i) {
    const double* vi = out.v.field(i);
    const double* e0 = bg.exp_u0.field(i);
    const double* wi = w.field(i);
    double* Ui = out.U.field(i);
    detail::NeumaierSum pot;
    for (std::size_t n = 0; n < nodes; ++n) {
      const double v = vi[n];
      if (v > kExponentGuard) {
        finite = false;
        break;
      }
      const double u = e0[n] * std::exp(v);
      Ui[n] = u;
      pot.add(u - b[i] * wi[n]);
    }
    if (finite) total.add(pot.value() * cell);
  }

  out.finite = finite;
  out.value = finite ? total.value() : std::numeric_limits<double>::infinity();
  if (!finite || !want_grad) return finite;

  out.grad = MultiField(m, grid.nx, grid.ny, 0.0);
  for (int i = 0; i < m; ++i) {
    periodic_neg_laplacian(w.field(i), grid, out.grad.field(i));
    const double lii = cm.L(i, i);
    const double lup = (i + 1 < m) ? cm.L(i + 1, i) : 0.0;
    const double* Ui = out.U.field(i);
    const double* Uup = (i + 1 < m) ? out.U.field(i + 1) : nullptr;
    double* gi = out.grad.field(i);
    for (std::size_t n = 0; n < nodes; ++n) {
      double g = gi[n] / lambda + lii * Ui[n] - b[i];
      if (Uup) g += lup * Uup[n];
      gi[n] = g;
    }
  }
  return true;
}

// Newton matvec: (Hp)_i = (1/lambda)(-Lap_h p_i) + (L^T diag(U) L p)_i.
void hessian_apply(const MultiField& p, const MultiField& U, const CouplingMatrix& cm,
                   double lambda, const TorusGrid& grid, MultiField& out, MultiField& scratch) {
  const int m = cm.m;
  apply_L(cm, p, scratch);
  for (int i = 0; i < m; ++i) {
    periodic_neg_laplacian(p.field(i), grid, out.field(i));
    const double lii = cm.L(i, i);
    const double lup = (i + 1 < m) ? cm.L(i + 1, i) : 0.0;
    const double* qi = scratch.field(i);
    const double* qup = (i + 1 < m) ? scratch.field(i + 1) : nullptr;
    const double* Ui = U.field(i);
    const double* Uup = (i + 1 < m) ? U.field(i + 1) : nullptr;
    double* oi = out.field(i);
    for (std::size_t n = 0; n < p.nodes(); ++n) {
      double val = oi[n] / lambda + lii * Ui[n] * qi[n];
      if (qup) val += lup * Uup[n] * qup[n];
      oi[n] = val;
    }
  }
}

// FFT-diagonalized preconditioner: per Fourier mode the tridiagonal
// species block (kappa/lambda) I + L^T diag(mean U) L, factored once per
// Newton step. Exact for spatially constant U.
class SpectralPreconditioner {
 public:
  SpectralPreconditioner(const TorusGrid& grid, int m)
      : grid_(grid),
        m_(m),
        spectral_(grid),
        hat_(static_cast<std::size_t>(m) * spectral_.modes()),
        lfac_(static_cast<std::size_t>(m) * spectral_.modes()),
        sfac_(static_cast<std::size_t>(std::max(m - 1, 1)) * spectral_.modes()),
        project_mean_zero_(false) {}

  void set_mean_zero(bool on) { project_mean_zero_ = on; }

  void build(const MultiField& U, const CouplingMatrix& cm, double lambda) {
    std::vector<double> ubar(m_);
    for (int i = 0; i < m_; ++i) ubar[i] = U.species_mean(i);
    std::vector<double> bdiag(m_), bsub(std::max(m_ - 1, 1));
    for (int i = 0; i < m_; ++i) {
      bdiag[i] = cm.L(i, i) * cm.L(i, i) * ubar[i];
      if (i + 1 < m_) {
        bdiag[i] += cm.L(i + 1, i) * cm.L(i + 1, i) * ubar[i + 1];
        bsub[i] = cm.L(i + 1, i) * cm.L(i + 1, i + 1) * ubar[i + 1];
      }
    }
    const int nm = spectral_.modes();
    std::vector<double> diag(m_), lf(m_), sf(std::max(m_ - 1, 1));
    for (int k = 0; k < nm; ++k) {
      const double kap = spectral_.laplacian_symbol(k) / lambda;
      for (int i = 0; i < m_; ++i) diag[i] = kap + bdiag[i];
      detail::tri_cholesky_factor(m_, diag.data(), bsub.data(), lf.data(), sf.data());
      for (int i = 0; i < m_; ++i) lfac_[static_cast<std::size_t>(i) * nm + k] = lf[i];
      for (int i = 0; i + 1 < m_; ++i) sfac_[static_cast<std::size_t>(i) * nm + k] = sf[i];
    }
  }

  void apply(const MultiField& r, MultiField& z) {
    const int nm = spectral_.modes();
    for (int i = 0; i < m_; ++i)
      spectral_.forward(r.field(i), hat_.data() + static_cast<std::size_t>(i) * nm);

    std::vector<double> re(m_), im(m_), lf(m_), sf(std::max(m_ - 1, 1));
    for (int k = 0; k < nm; ++k) {
      for (int i = 0; i < m_; ++i) {
        const std::complex<double> c = hat_[static_cast<std::size_t>(i) * nm + k];
        re[i] = c.real();
        im[i] = c.imag();
        lf[i] = lfac_[static_cast<std::size_t>(i) * nm + k];
        if (i + 1 < m_) sf[i] = sfac_[static_cast<std::size_t>(i) * nm + k];
      }
      detail::tri_cholesky_solve(m_, lf.data(), sf.data(), re.data());
      detail::tri_cholesky_solve(m_, lf.data(), sf.data(), im.data());
      const bool zero_mode = project_mean_zero_ && spectral_.laplacian_symbol(k) == 0.0;
      for (int i = 0; i < m_; ++i) {
        hat_[static_cast<std::size_t>(i) * nm + k] =
            zero_mode ? std::complex<double>(0.0, 0.0) : std::complex<double>(re[i], im[i]);
      }
    }
    for (int i = 0; i < m_; ++i)
      spectral_.inverse(hat_.data() + static_cast<std::size_t>(i) * nm, z.field(i));
  }

 private:
  TorusGrid grid_;
  int m_;
  PeriodicSpectral spectral_;
  std::vector<std::complex<double>> hat_;
  std::vector<double> lfac_, sfac_;
  bool project_mean_zero_;
};

void subtract_species_means(MultiField& f) {
  for (int i = 0; i < f.species(); ++i) {
    const double mean = f.species_mean(i);
    double* fi = f.field(i);
    for (std::size_t n = 0; n < f.nodes(); ++n) fi[n] -= mean;
  }
}

std::vector<double> species_means_of(const MultiField& v) {
  std::vector<double> out(v.species());
  for (int i = 0; i < v.species(); ++i) out[i] = v.species_mean(i);
  return out;
}

// Solve L wbar = vbar for the constant per-species shifts.
std::vector<double> means_w_from_v(const CouplingMatrix& cm, const std::vector<double>& vbar) {
  std::vector<double> wbar(cm.m);
  for (int i = 0; i < cm.m; ++i) {
    double rhs = vbar[i];
    if (i > 0) rhs -= cm.L(i, i - 1) * wbar[i - 1];
    wbar[i] = rhs / cm.L(i, i);
  }
  return wbar;
}

FieldState assemble_state(MultiField w, Evaluation& ev, const TorusBackground& bg,
                          const CouplingMatrix& cm, const ModelParams& params, int iterations,
                          bool converged) {
  FieldState st;
  st.domain = DomainKind::Torus;
  st.converged = converged;
  st.iterations = iterations;
  st.gradient_sup = ev.grad.empty() ? 0.0 : ev.grad.sup_norm();
  st.residual_sup = params.lambda * st.gradient_sup;
  st.functional_value = ev.value;

  // The minimization runs in the functional's own variables, where
  // u_i = u0_i + (Lw)_i. Reported fields subtract the constant ln r_i
  // offset so that u_i = u0_i + ln r_i + v_i with v = Lw holds on every
  // domain, and the vortex-free minimizer reads w = 0.
  std::vector<double> lnr(cm.m);
  for (int i = 0; i < cm.m; ++i) lnr[i] = std::log(cm.r[i]);
  const std::vector<double> wbar = means_w_from_v(cm, lnr);

  st.w = std::move(w);
  st.v = std::move(ev.v);
  st.u = MultiField(cm.m, st.v.nx(), st.v.ny(), 0.0);
  for (int i = 0; i < cm.m; ++i) {
    const double* u0 = bg.u0.field(i);
    double* vi = st.v.field(i);
    double* wi = st.w.field(i);
    double* ui = st.u.field(i);
    for (std::size_t n = 0; n < st.v.nodes(); ++n) {
      ui[n] = u0[n] + vi[n];
      vi[n] -= lnr[i];
      wi[n] -= wbar[i];
    }
  }
  st.exp_u = std::move(ev.U);
  return st;
}

void fill_constraint_report(TorusSolveResult& res, const TorusGrid& grid) {
  const int m = res.state.exp_u.species();
  res.report.constraint_integral.assign(m, 0.0);
  res.report.constraint_residual.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    const double integral =
        detail::compensated_total(res.state.exp_u.field(i), res.state.exp_u.nodes()) *
        grid.cell_area();
    res.report.constraint_integral[i] = integral;
    const double K = res.report.K[i];
    res.report.constraint_residual[i] = std::abs(integral - K) / std::max(std::abs(K), 1e-300);
  }
}

}  // namespace

std::vector<double> torus_source_vector(const CouplingMatrix& cm, double lambda,
                                        const std::vector<int>& n, double area) {
  std::vector<double> b(cm.m, 0.0);
  for (int i = 0; i < cm.m; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= i; ++j)
      acc += cm.Linv(i, j) * (1.0 - four_pi * n[j] / (lambda * area));
    b[i] = acc;
  }
  return b;
}

double torus_functional(const MultiField& w, const TorusBackground& bg, const CouplingMatrix& cm,
                        const ModelParams& params, const TorusGrid& grid) {
  const std::vector<double> b =
      torus_source_vector(cm, params.lambda, bg.counts, grid.area());
  Evaluation ev;
  if (!evaluate(w, bg, cm, params, grid, b, false, ev))
    throw DivergedIterateError("torus_functional: exponent exceeded 700");
  return ev.value;
}

MultiField torus_gradient(const MultiField& w, const TorusBackground& bg,
                          const CouplingMatrix& cm, const ModelParams& params,
                          const TorusGrid& grid) {
  const std::vector<double> b =
      torus_source_vector(cm, params.lambda, bg.counts, grid.area());
  Evaluation ev;
  if (!evaluate(w, bg, cm, params, grid, b, true, ev))
    throw DivergedIterateError("torus_gradient: exponent exceeded 700");
  return ev.grad;
}

TorusSolveResult solve_torus(const VortexConfiguration& cfg, const ModelParams& params,
                             const TorusGrid& grid, const CouplingMatrix& cm,
                             const TorusBackground& bg, const TorusOptions& opts) {
  cfg.validate(cm.m);
  const int m = cm.m;
  const double lambda = params.lambda;
  const double cell = grid.cell_area();
  const double stop_scale = std::max(1.0, lambda);

  TorusSolveResult res;
  res.report.existence = check_torus_existence(cm, lambda, bg.counts, grid.area());
  res.report.K = res.report.existence.K();

  if (!res.report.existence.all_hold) {
    // Necessity of the sharp conditions: certify without iterating.
    res.report.nonexistent = true;
    res.state.domain = DomainKind::Torus;
    res.state.converged = false;
    return res;
  }

  const std::vector<double> b = torus_source_vector(cm, lambda, bg.counts, grid.area());

  // Start at the constrained-route base point: zero oscillation, species
  // means matching the natural constraints. Exact for the vortex-free case.
  MultiField w(m, grid.nx, grid.ny, 0.0);
  {
    std::vector<double> vbar(m);
    for (int i = 0; i < m; ++i) {
      const double S = detail::compensated_total(bg.exp_u0.field(i), bg.exp_u0.nodes()) * cell;
      vbar[i] = std::log(res.report.K[i]) - std::log(S);
    }
    const std::vector<double> wbar = means_w_from_v(cm, vbar);
    for (int i = 0; i < m; ++i) {
      double* wi = w.field(i);
      for (std::size_t n = 0; n < w.nodes(); ++n) wi[n] = wbar[i];
    }
  }

  // Near the threshold the means drift far before settling; allow the
  // raised budget there.
  double margin = 1.0;
  for (int i = 0; i < m; ++i)
    margin = std::min(margin, res.report.K[i] / (grid.area() * cm.r[i]));
  const int iter_cap = (margin < 0.1) ? opts.near_threshold_max_iter : opts.max_iter;

  Evaluation ev;
  if (!evaluate(w, bg, cm, params, grid, b, true, ev))
    throw DivergedIterateError("solve_torus: initial iterate overflows");

  SpectralPreconditioner precond(grid, m);
  MultiField delta(m, grid.nx, grid.ny), resid(m, grid.nx, grid.ny), z(m, grid.nx, grid.ny),
      p(m, grid.nx, grid.ny), Ap(m, grid.nx, grid.ny), scratch(m, grid.nx, grid.ny),
      trial(m, grid.nx, grid.ny), prev_dir(m, grid.nx, grid.ny), prev_grad(m, grid.nx, grid.ny);
  bool have_prev_cg = false;

  int iter = 0;
  for (;; ++iter) {
    res.report.mean_v_trajectory.push_back(species_means_of(ev.v));
    const double gsup = ev.grad.sup_norm();
    res.state.residual_history.push_back(lambda * gsup);
    res.state.functional_history.push_back(ev.value);
    if (gsup * stop_scale <= opts.tol) break;
    if (iter >= iter_cap)
      throw NonConvergenceError(
          "solve_torus: iteration cap (" + std::to_string(iter_cap) + ") exceeded",
          res.state.residual_history, res.report.mean_v_trajectory);

    precond.build(ev.U, cm, lambda);

    delta.fill(0.0);
    resid = ev.grad;
    resid.scale(-1.0);
    precond.apply(resid, z);
    double rz = resid.dot(z);
    p = z;
    const double b_norm = std::sqrt(resid.dot(resid));
    const double cg_tol = std::min(0.1, std::sqrt(gsup)) * b_norm;
    for (int cg = 0; cg < 1000 && b_norm > 0.0; ++cg) {
      hessian_apply(p, ev.U, cm, lambda, grid, Ap, scratch);
      const double pAp = p.dot(Ap);
      if (!(pAp > 0.0)) break;
      const double alpha = rz / pAp;
      delta.axpy(alpha, p);
      resid.axpy(-alpha, Ap);
      if (std::sqrt(resid.dot(resid)) <= cg_tol) break;
      precond.apply(resid, z);
      const double rz_new = resid.dot(z);
      const double beta = rz_new / rz;
      rz = rz_new;
      p.scale(beta);
      p.axpy(1.0, z);
    }

    auto try_direction = [&](const MultiField& dir, double dd) -> double {
      double t = 1.0;
      for (int back = 0; back < 60; ++back) {
        trial = w;
        trial.axpy(t, dir);
        Evaluation cand;
        evaluate(trial, bg, cm, params, grid, b, false, cand);
        if (cand.finite && cand.value <= ev.value + 1e-4 * t * dd) return t;
        t *= 0.5;
      }
      return 0.0;
    };

    double dd = ev.grad.dot(delta) * cell;
    double step = (dd < 0.0) ? try_direction(delta, dd) : 0.0;

    if (step == 0.0) {
      precond.apply(ev.grad, z);
      MultiField dir = z;
      dir.scale(-1.0);
      if (have_prev_cg) {
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
        throw NonConvergenceError("solve_torus: line search failed", res.state.residual_history,
                                  res.report.mean_v_trajectory);
      prev_dir = dir;
      prev_grad = ev.grad;
      have_prev_cg = true;
      w.axpy(step, dir);
    } else {
      have_prev_cg = false;
      w.axpy(step, delta);
    }

    if (!evaluate(w, bg, cm, params, grid, b, true, ev))
      throw DivergedIterateError("solve_torus: accepted iterate overflows");
  }

  std::vector<double> residual_history = std::move(res.state.residual_history);
  std::vector<double> functional_history = std::move(res.state.functional_history);
  res.state = assemble_state(std::move(w), ev, bg, cm, params, iter, true);
  res.state.residual_history = std::move(residual_history);
  res.state.functional_history = std::move(functional_history);
  fill_constraint_report(res, grid);
  return res;
}

TorusSolveResult constrained_solve_torus(const VortexConfiguration& cfg,
                                         const ModelParams& params, const TorusGrid& grid,
                                         const CouplingMatrix& cm, const TorusBackground& bg,
                                         const TorusOptions& opts) {
  cfg.validate(cm.m);
  const int m = cm.m;
  const double lambda = params.lambda;
  const double cell = grid.cell_area();
  const double stop_scale = std::max(1.0, lambda);

  TorusSolveResult res;
  res.report.existence = check_torus_existence(cm, lambda, bg.counts, grid.area());
  res.report.K = res.report.existence.K();
  if (!res.report.existence.all_hold) {
    res.report.nonexistent = true;
    res.state.domain = DomainKind::Torus;
    res.state.converged = false;
    return res;
  }
  const std::vector<double>& K = res.report.K;
  const std::vector<double> b = torus_source_vector(cm, lambda, bg.counts, grid.area());

  double margin = 1.0;
  for (int i = 0; i < m; ++i) margin = std::min(margin, K[i] / (grid.area() * cm.r[i]));
  const int iter_cap = (margin < 0.1) ? opts.near_threshold_max_iter : opts.max_iter;

  // Reduced objective over mean-zero wdot:
  //   J = (1/2lambda) sum int |grad wdot_i|^2 + sum_i K_i ln S_i + const,
  //   S_i = int e^{u0_i + (L wdot)_i}.
  // E_i = e^{u0_i + z_i}; the assembled U is e^{vbar_i} E_i and satisfies
  // the constraints exactly.
  struct REval {
    double value = 0.0;
    bool finite = true;
    MultiField z, E, U, grad;
    std::vector<double> S, vbar;
  };

  auto reduced_evaluate = [&](const MultiField& wd, bool want_grad, REval& out) -> bool {
    out.z = MultiField(m, grid.nx, grid.ny, 0.0);
    apply_L(cm, wd, out.z);
    out.E = MultiField(m, grid.nx, grid.ny, 0.0);
    out.S.assign(m, 0.0);
    out.vbar.assign(m, 0.0);

    const double idx2 = 1.0 / (grid.dx() * grid.dx());
    const double idy2 = 1.0 / (grid.dy() * grid.dy());
    detail::NeumaierSum total;
    for (int i = 0; i < m; ++i) {
      const double* wi = wd.field(i);
      detail::NeumaierSum kin;
      for (int iy = 0; iy < grid.ny; ++iy) {
        const int yp = (iy + 1) % grid.ny;
        for (int ix = 0; ix < grid.nx; ++ix) {
          const int xp = (ix + 1) % grid.nx;
          const std::size_t c = grid.idx(ix, iy);
          const double dxv = wi[grid.idx(xp, iy)] - wi[c];
          const double dyv = wi[grid.idx(ix, yp)] - wi[c];
          kin.add(idx2 * dxv * dxv + idy2 * dyv * dyv);
        }
      }
      total.add(kin.value() * cell / (2.0 * lambda));
    }

    for (int i = 0; i < m; ++i) {
      const double* zi = out.z.field(i);
      const double* e0 = bg.exp_u0.field(i);
      double* Ei = out.E.field(i);
      detail::NeumaierSum sum;
      for (std::size_t n = 0; n < grid.nodes(); ++n) {
        if (zi[n] > kExponentGuard) {
          out.finite = false;
          out.value = std::numeric_limits<double>::infinity();
          return false;
        }
        Ei[n] = e0[n] * std::exp(zi[n]);
        sum.add(Ei[n]);
      }
      out.S[i] = sum.value() * cell;
      out.vbar[i] = std::log(K[i]) - std::log(out.S[i]);
      total.add(K[i] * std::log(out.S[i]) + K[i] - K[i] * std::log(K[i]));
    }
    out.finite = true;
    out.value = total.value();
    if (!want_grad) return true;

    // grad_j = P0[ -(1/lambda) Lap wdot_j + (L^T [ (K_i/S_i) E_i ])_j ].
    out.U = MultiField(m, grid.nx, grid.ny, 0.0);
    for (int i = 0; i < m; ++i) {
      const double scaleU = K[i] / out.S[i];  // = e^{vbar_i}
      const double* Ei = out.E.field(i);
      double* Ui = out.U.field(i);
      for (std::size_t n = 0; n < grid.nodes(); ++n) Ui[n] = scaleU * Ei[n];
    }
    out.grad = MultiField(m, grid.nx, grid.ny, 0.0);
    for (int i = 0; i < m; ++i) {
      periodic_neg_laplacian(wd.field(i), grid, out.grad.field(i));
      const double lii = cm.L(i, i);
      const double lup = (i + 1 < m) ? cm.L(i + 1, i) : 0.0;
      const double* Ui = out.U.field(i);
      const double* Uup = (i + 1 < m) ? out.U.field(i + 1) : nullptr;
      double* gi = out.grad.field(i);
      for (std::size_t n = 0; n < grid.nodes(); ++n) {
        double g = gi[n] / lambda + lii * Ui[n];
        if (Uup) g += lup * Uup[n];
        gi[n] = g;
      }
    }
    subtract_species_means(out.grad);
    return true;
  };

  MultiField wd(m, grid.nx, grid.ny, 0.0);
  REval ev;
  reduced_evaluate(wd, true, ev);

  SpectralPreconditioner precond(grid, m);
  precond.set_mean_zero(true);
  MultiField delta(m, grid.nx, grid.ny), resid(m, grid.nx, grid.ny), z(m, grid.nx, grid.ny),
      p(m, grid.nx, grid.ny), Ap(m, grid.nx, grid.ny), scratch(m, grid.nx, grid.ny),
      trial(m, grid.nx, grid.ny);

  // Hessian of the reduced objective along delta:
  //   P0[ (1/lambda)(-Lap d) + L^T( U (Ld - c) ) ],
  // where c_i is the E-weighted mean of (Ld)_i.
  auto reduced_hessian_apply = [&](const MultiField& d, MultiField& out) {
    apply_L(cm, d, scratch);
    std::vector<double> c(m, 0.0);
    for (int i = 0; i < m; ++i) {
      const double* Ei = ev.E.field(i);
      const double* qi = scratch.field(i);
      detail::NeumaierSum s;
      for (std::size_t n = 0; n < grid.nodes(); ++n) s.add(Ei[n] * qi[n]);
      c[i] = s.value() * cell / ev.S[i];
    }
    for (int i = 0; i < m; ++i) {
      periodic_neg_laplacian(d.field(i), grid, out.field(i));
      const double lii = cm.L(i, i);
      const double lup = (i + 1 < m) ? cm.L(i + 1, i) : 0.0;
      const double* Ui = ev.U.field(i);
      const double* Uup = (i + 1 < m) ? ev.U.field(i + 1) : nullptr;
      const double* qi = scratch.field(i);
      const double* qup = (i + 1 < m) ? scratch.field(i + 1) : nullptr;
      double* oi = out.field(i);
      for (std::size_t n = 0; n < grid.nodes(); ++n) {
        double val = oi[n] / lambda + lii * Ui[n] * (qi[n] - c[i]);
        if (qup) val += lup * Uup[n] * (qup[n] - c[i + 1]);
        oi[n] = val;
      }
    }
    subtract_species_means(out);
  };

  int iter = 0;
  for (;; ++iter) {
    res.report.mean_v_trajectory.push_back(ev.vbar);
    const double gsup = ev.grad.sup_norm();
    res.state.residual_history.push_back(lambda * gsup);
    res.state.functional_history.push_back(ev.value);
    if (gsup * stop_scale <= opts.tol) break;
    if (iter >= iter_cap)
      throw NonConvergenceError("constrained_solve_torus: iteration cap (" +
                                    std::to_string(iter_cap) + ") exceeded",
                                res.state.residual_history, res.report.mean_v_trajectory);

    precond.build(ev.U, cm, lambda);

    delta.fill(0.0);
    resid = ev.grad;
    resid.scale(-1.0);
    precond.apply(resid, z);
    double rz = resid.dot(z);
    p = z;
    const double b_norm = std::sqrt(resid.dot(resid));
    const double cg_tol = std::min(0.1, std::sqrt(gsup)) * b_norm;
    for (int cg = 0; cg < 1000 && b_norm > 0.0; ++cg) {
      reduced_hessian_apply(p, Ap);
      const double pAp = p.dot(Ap);
      if (!(pAp > 0.0)) break;
      const double alpha = rz / pAp;
      delta.axpy(alpha, p);
      resid.axpy(-alpha, Ap);
      if (std::sqrt(resid.dot(resid)) <= cg_tol) break;
      precond.apply(resid, z);
      const double rz_new = resid.dot(z);
      const double beta = rz_new / rz;
      rz = rz_new;
      p.scale(beta);
      p.axpy(1.0, z);
    }

    double dd = ev.grad.dot(delta) * cell;
    MultiField* dir = &delta;
    if (!(dd < 0.0)) {
      precond.apply(ev.grad, z);
      delta = z;
      delta.scale(-1.0);
      dd = ev.grad.dot(delta) * cell;
    }

    double t = 1.0;
    bool accepted = false;
    for (int back = 0; back < 60; ++back) {
      trial = wd;
      trial.axpy(t, *dir);
      REval cand;
      if (reduced_evaluate(trial, false, cand) && cand.value <= ev.value + 1e-4 * t * dd) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted)
      throw NonConvergenceError("constrained_solve_torus: line search failed",
                                res.state.residual_history, res.report.mean_v_trajectory);
    wd.axpy(t, *dir);
    reduced_evaluate(wd, true, ev);
  }

  // Assemble the full state: w = wdot + wbar with L wbar = vbar.
  const std::vector<double> wbar = means_w_from_v(cm, ev.vbar);
  MultiField w = wd;
  for (int i = 0; i < m; ++i) {
    double* wi = w.field(i);
    for (std::size_t n = 0; n < w.nodes(); ++n) wi[n] += wbar[i];
  }

  Evaluation full;
  if (!evaluate(w, bg, cm, params, grid, b, true, full))
    throw DivergedIterateError("constrained_solve_torus: assembled state overflows");
  std::vector<double> residual_history = std::move(res.state.residual_history);
  std::vector<double> functional_history = std::move(res.state.functional_history);
  res.state = assemble_state(std::move(w), full, bg, cm, params, iter, true);
  res.state.residual_history = std::move(residual_history);
  res.state.functional_history = std::move(functional_history);
  fill_constraint_report(res, grid);
  return res;
}

std::vector<ScanRow> threshold_scan(const VortexConfiguration& cfg, const ModelParams& params,
                                    const TorusGrid& grid, const CouplingMatrix& cm,
                                    const TorusBackground& bg,
                                    const std::vector<double>& lambdas,
                                    const TorusOptions& opts) {
  std::vector<ScanRow> rows;
  rows.reserve(lambdas.size());
  for (double lam : lambdas) {
    ScanRow row;
    row.value = lam;
    ModelParams p = params;
    p.lambda = lam;
    const ExistenceCheck chk = check_torus_existence(cm, lam, bg.counts, grid.area());
    row.feasible = chk.all_hold;
    row.K = chk.K();
    if (row.feasible) {
      try {
        TorusSolveResult res = solve_torus(cfg, p, grid, cm, bg, opts);
        row.constraint_residual = res.report.constraint_residual;
        row.functional = res.state.functional_value;
        row.iterations = res.state.iterations;
        row.min_u.resize(cm.m);
        row.max_u.resize(cm.m);
        for (int i = 0; i < cm.m; ++i) {
          const double* ui = res.state.u.field(i);
          double mn = ui[0], mx = ui[0];
          for (std::size_t n = 1; n < res.state.u.nodes(); ++n) {
            mn = std::min(mn, ui[n]);
            mx = std::max(mx, ui[n]);
          }
          row.min_u[i] = mn;
          row.max_u[i] = mx;
        }
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace abjm
