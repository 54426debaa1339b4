#pragma once

#include <string>

#include "abjm/model.hpp"
#include "abjm/planar.hpp"

namespace abjm {

// Parsed run configuration. The on-disk format is line-oriented text:
//
//   # comment
//   schema = vortexsuite-config/1        (optional)
//   model.m = 2          (or model.N = 3; exactly one of the two)
//   model.a = 0.0
//   model.lambda = 4.0   (or model.mu = 1.0; exactly one of the two)
//   model.k = 1.0        (optional, default 1)
//   model.s = -1         (optional, default -1)
//   domain.kind = torus | disk
//   domain.L1 = 1.0      domain.L2 = 1.0   domain.nx = 128  domain.ny = 128
//   domain.radius = auto | <value>         (disk)
//   domain.n = auto | <odd integer>        (disk, nodes per side)
//   solver.tol = 1e-10
//   solver.max_iter = 500
//   solver.nu = auto | <value>             (disk background sharpness)
//   solver.boundary = lnr | zero           (disk Dirichlet data)
//   output.dir = out
//   vortex.1 = 0.0,0.0 ; 0.5,0.25          (points separated by ';')
//   vortex.2 =
//
// Unknown keys and malformed values raise ConfigError naming the field.
struct RunConfig {
  ModelParams model;
  bool nu_auto = true;

  enum class Kind { Disk, Torus };
  Kind kind = Kind::Torus;

  // torus
  double L1 = 1.0, L2 = 1.0;
  int nx = 128, ny = 128;

  // disk
  double radius = 0.0;
  bool radius_auto = true;
  int disk_n = 0;
  bool disk_n_auto = true;
  PlanarBoundary boundary = PlanarBoundary::AsymptoticLnR;

  VortexConfiguration vortices;

  double tol = 1e-10;
  int max_iter = 500;

  std::string out_dir;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

}  // namespace abjm
