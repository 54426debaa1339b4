#pragma once

#include <vector>

#include "abjm/geometry.hpp"

namespace abjm {

enum class DomainKind { Disk, Torus };

// Converged (or certified-infeasible) solution fields on the solve grid.
//   w      minimization variables
//   v      v = L w, applied pointwise across species
//   u      u_i = u0_i + ln r_i + v_i
//   exp_u  e^{u_i}, finite everywhere (exactly zero at planar vortex nodes)
// On the torus the functional's own variable is w + L^{-1} ln r; the
// reported w subtracts that constant so the vortex-free minimizer is
// w = 0 on either domain.
struct FieldState {
  DomainKind domain = DomainKind::Disk;
  MultiField w, v, u, exp_u;

  bool converged = false;
  int iterations = 0;
  double residual_sup = 0.0;  // sup norm of the discrete PDE residual
  double gradient_sup = 0.0;  // sup norm of the functional gradient
  double functional_value = 0.0;
  std::vector<double> residual_history;
  std::vector<double> functional_history;  // one value per accepted iterate
};

}  // namespace abjm
