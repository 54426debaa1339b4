#include "abjm/model.hpp"

#include <algorithm>
#include <string>

#include "abjm/errors.hpp"

namespace abjm {

void ModelParams::validate() const {
  if (m < 2) throw ConfigError("model.m: must be an integer >= 2, got " + std::to_string(m));
  if (!(a >= 0.0)) throw ConfigError("model.a: must be >= 0");
  if (!(lambda > 0.0)) throw ConfigError("model.lambda: must be > 0");
  if (!(k > 0.0)) throw ConfigError("model.k: must be > 0");
  if (s != 1 && s != -1) throw ConfigError("model.s: must be +1 or -1");
  if (!(nu > 0.0)) throw ConfigError("solver.nu: must be > 0");
}

std::vector<int> VortexConfiguration::counts() const {
  std::vector<int> n(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) n[i] = static_cast<int>(points[i].size());
  return n;
}

int VortexConfiguration::total() const {
  int t = 0;
  for (const auto& list : points) t += static_cast<int>(list.size());
  return t;
}

double VortexConfiguration::max_radius() const {
  double r = 0.0;
  for (const auto& list : points)
    for (const auto& p : list) r = std::max(r, std::hypot(p.x, p.y));
  return r;
}

void VortexConfiguration::validate(int m) const {
  if (species() != m)
    throw ConfigError("vortex: expected " + std::to_string(m) + " point lists, got " +
                      std::to_string(species()));
}

}  // namespace abjm
