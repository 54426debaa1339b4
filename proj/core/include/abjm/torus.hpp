#pragma once

#include <string>
#include <vector>

#include "abjm/background.hpp"
#include "abjm/coupling.hpp"
#include "abjm/geometry.hpp"
#include "abjm/model.hpp"
#include "abjm/state.hpp"

namespace abjm {

struct TorusOptions {
  double tol = 1e-10;
  int max_iter = 500;
  // Raised cap for runs close to the existence threshold, where the means
  // of v drift far before settling.
  int near_threshold_max_iter = 2000;
};

// Outcome of a doubly periodic solve. When any natural-constraint target
// K_i <= 0 the solver refuses without iterating and the existence block is
// the certificate.
struct TorusReport {
  ExistenceCheck existence;
  bool nonexistent = false;
  std::vector<double> K;
  std::vector<double> constraint_integral;  // quadrature of e^{u0_i + v_i}
  std::vector<double> constraint_residual;  // relative deviation from K_i
  std::vector<std::vector<double>> mean_v_trajectory;  // per accepted iterate
};

struct TorusSolveResult {
  FieldState state;
  TorusReport report;
};

// b = L^{-1} 1 - (4 pi / (lambda |Omega|)) L^{-1} n.
std::vector<double> torus_source_vector(const CouplingMatrix& cm, double lambda,
                                        const std::vector<int>& n, double area);

// Discretization of the periodic functional:
//   (1/2lambda) sum_i int |grad w_i|^2
//   + int (e^{u0_1 + L_11 w_1} + sum_{i>=2} e^{u0_i + L_{i,i-1}w_{i-1} + L_ii w_i})
//   - sum_i int b_i w_i.
// Throws DivergedIterateError when any exponent exceeds 700.
double torus_functional(const MultiField& w, const TorusBackground& bg, const CouplingMatrix& cm,
                        const ModelParams& params, const TorusGrid& grid);

// Gradient per unit cell area: -(1/lambda) Lap_h w_i + (L^T U)_i - b_i.
// Zero gradient is exactly a discrete solution of the transformed system.
MultiField torus_gradient(const MultiField& w, const TorusBackground& bg,
                          const CouplingMatrix& cm, const ModelParams& params,
                          const TorusGrid& grid);

// Direct minimization (damped Newton, FFT-diagonalized preconditioner).
// Evaluates the sharp existence conditions first and certifies
// nonexistence without iterating when they fail.
TorusSolveResult solve_torus(const VortexConfiguration& cfg, const ModelParams& params,
                             const TorusGrid& grid, const CouplingMatrix& cm,
                             const TorusBackground& bg, const TorusOptions& opts = {});

// Constrained route: minimizes over mean-zero fields with the species
// means recovered in closed form from the natural constraints
//   v-mean_i = ln K_i - ln int e^{u0_i + (L w-dot)_i},
// so every iterate satisfies int e^{u0_i + v_i} = K_i exactly. The
// minimizer agrees with solve_torus within 10 * tol.
TorusSolveResult constrained_solve_torus(const VortexConfiguration& cfg,
                                         const ModelParams& params, const TorusGrid& grid,
                                         const CouplingMatrix& cm, const TorusBackground& bg,
                                         const TorusOptions& opts = {});

// One row of a parameter scan across the existence threshold.
struct ScanRow {
  double value = 0.0;  // scanned parameter (lambda or cell area)
  bool feasible = false;
  std::vector<double> K;
  std::vector<double> constraint_residual;
  std::vector<double> min_u, max_u;
  double functional = 0.0;
  int iterations = 0;
  std::string error;  // non-empty if the row's solve failed
};

// Scans lambda over an increasing list; infeasible rows carry no solve
// data, and per-row failures are recorded without aborting the scan.
std::vector<ScanRow> threshold_scan(const VortexConfiguration& cfg, const ModelParams& params,
                                    const TorusGrid& grid, const CouplingMatrix& cm,
                                    const TorusBackground& bg,
                                    const std::vector<double>& lambdas,
                                    const TorusOptions& opts = {});

}  // namespace abjm
