#pragma once

#include <cmath>
#include <vector>

namespace abjm {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Physical and algebraic parameters of the reduced vortex system.
//   m      number of field species (gauge group rank minus one, m >= 2)
//   a      deformation parameter, a >= 0
//   lambda coupling, lambda = 4 mu^2 > 0
//   k      Chern-Simons level, used only in energy reporting
//   s      signature symbol, +1 or -1 (default -1)
//   nu     sharpness of the planar background functions, nu > 0
struct ModelParams {
  int m = 2;
  double a = 0.0;
  double lambda = 4.0;
  double k = 1.0;
  int s = -1;
  double nu = 1.0;

  double mu() const { return 0.5 * std::sqrt(lambda); }
  int n_species() const { return m; }
  int gauge_rank() const { return m + 1; }  // N

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Prescribed vortex sets, one point list per species; repeated points
// encode multiplicity.
struct VortexConfiguration {
  std::vector<std::vector<Point>> points;

  int species() const { return static_cast<int>(points.size()); }
  std::vector<int> counts() const;
  int total() const;
  double max_radius() const;  // max |p| over all species
  bool empty() const { return total() == 0; }

  static VortexConfiguration none(int m) { return VortexConfiguration{std::vector<std::vector<Point>>(m)}; }

  // Throws ConfigError if the list count does not match m.
  void validate(int m) const;
};

}  // namespace abjm
