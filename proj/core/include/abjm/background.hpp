#pragma once

#include <vector>

#include "abjm/coupling.hpp"
#include "abjm/geometry.hpp"
#include "abjm/model.hpp"

namespace abjm {

// Planar background carrying the vortex singularities:
//   u0_i(x)   = -sum_s ln(1 + nu |x - p_{i,s}|^-2)
//   g_i(x)    =  sum_s 4 nu / (nu + |x - p_{i,s}|^2)^2,   integral g_i = 4 pi n_i
//   h         = (1/lambda) L^{-1} g
//   h~_i      = (1/(lambda r_i)) sum_j (R^{-1})_ji g_j
// exp_u0 = e^{u0} is stored as the primary field: it is finite everywhere
// and exactly zero at vortex points, so no -inf arithmetic ever reaches the
// solver. u0 itself is regularized at vortex-coincident nodes using a
// half-cell-diagonal offset and only used for reporting/output.
struct PlanarBackground {
  double nu = 1.0;
  int regularized_nodes = 0;
  MultiField u0, exp_u0, g, h, h_tilde;
};

PlanarBackground make_planar_background(const VortexConfiguration& cfg, const DiskGrid& grid,
                                        double nu, const CouplingMatrix& cm, double lambda);

// Smallest nu in the doubling sequence 1, 2, 4, ... for which
// sup |h~_i| <= 1/2 on the grid. Deterministic; the per-step sup values
// are recorded. Throws NonConvergenceError after 60 doublings.
struct NuTuneResult {
  double nu = 1.0;
  int doublings = 0;
  std::vector<double> sup_h_tilde;  // one entry per tried nu
};

NuTuneResult autotune_nu(const VortexConfiguration& cfg, const DiskGrid& grid,
                         const CouplingMatrix& cm, double lambda);

// A vortex snapped to its nearest lattice node (ties toward the lower node
// index per axis); weight counts multiplicity at that node.
struct DeltaNode {
  int ix = 0;
  int iy = 0;
  double weight = 0.0;
};

// Doubly periodic background: u0_i solves
//   Laplacian_h u0_i = 4 pi (discrete delta sum) - 4 pi n_i / |Omega|
// exactly in the discrete sense, gauge-fixed to zero grid mean. Vortices
// outside the fundamental cell are wrapped by periodicity.
struct TorusBackground {
  MultiField u0, exp_u0;
  std::vector<std::vector<DeltaNode>> deltas;  // per species
  std::vector<int> counts;
  double source_residual = 0.0;  // max relative residual of the defining identity
};

TorusBackground make_torus_background(const VortexConfiguration& cfg, const TorusGrid& grid);

}  // namespace abjm
