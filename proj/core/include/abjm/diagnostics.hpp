#pragma once

#include <vector>

#include "abjm/background.hpp"
#include "abjm/coupling.hpp"
#include "abjm/geometry.hpp"
#include "abjm/model.hpp"
#include "abjm/state.hpp"

namespace abjm {

struct QuantizedIntegral {
  double computed = 0.0;  // cell quadrature of sum_j R_ij e^{u_j} - 1
  double target = 0.0;    // -4 pi n_i / lambda
};

std::vector<QuantizedIntegral> quantized_integrals(const FieldState& state,
                                                   const CouplingMatrix& cm,
                                                   const ModelParams& params,
                                                   const std::vector<int>& counts,
                                                   const TorusGrid& grid);

// Disk variant integrates over interior nodes only.
std::vector<QuantizedIntegral> quantized_integrals(const FieldState& state,
                                                   const CouplingMatrix& cm,
                                                   const ModelParams& params,
                                                   const std::vector<int>& counts,
                                                   const DiskGrid& grid);

// Diagonal magnetic field B_1..B_N on the torus with the signature fixed
// to s = -1:
//   B_1 = 2 a^2 mu^2 (e^{u_1} + 1),
//   B_i = B_{i-1} - (1/2)(Lap_h u_{i-1} - 4 pi * discrete deltas),
// the delta spikes removed so that B stays the smooth field and its
// integral keeps the exact topological bookkeeping.
std::vector<std::vector<double>> magnetic_field(const FieldState& state,
                                                const ModelParams& params, const TorusGrid& grid,
                                                const TorusBackground& bg);

// Pointwise closed form of the same field (valid on either domain):
//   B_i = -2 s mu^2 (a^2 + i - 1)(e^{u_i} - e^{u_{i-1}} + 1), e^{u_0} =
//   e^{u_N} = 0, evaluated at s = -1. Cross-check route for magnetic_field.
std::vector<std::vector<double>> magnetic_field_direct(const FieldState& state,
                                                       const ModelParams& params);

struct FluxResult {
  double numeric = 0.0;      // -s int Tr(B), quadrature of the recursion field
  double closed_form = 0.0;  // 2 N a^2 ([1 + sum_i (R^-1)_1i] mu^2 |Omega|
                             //   - pi sum_i (R^-1)_1i n_i) + 2 pi sum_i (N-i) n_i
  double rel_error = 0.0;
};

// Total magnetic flux over the fundamental cell. Throws
// FluxDivergenceError for planar states: over the full plane the flux
// integral diverges.
FluxResult total_flux(const FieldState& state, const CouplingMatrix& cm,
                      const ModelParams& params, const TorusGrid& grid,
                      const TorusBackground& bg);

// Minimum energy at a = 0: E = k mu sum_i (N - i) n_i, which also equals
// (k mu / 2 pi) |int Tr B|. Throws ConfigError for a != 0 (no closed form
// is available away from the limit).
double energy_a0(const ModelParams& params, const std::vector<int>& n);

}  // namespace abjm
