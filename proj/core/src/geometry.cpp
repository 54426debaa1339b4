#include "abjm/geometry.hpp"

#include <cmath>
#include <string>

#include "abjm/errors.hpp"

namespace abjm {

TorusGrid TorusGrid::make(double L1, double L2, int nx, int ny) {
  if (!(L1 > 0.0)) throw ConfigError("domain.L1: must be > 0");
  if (!(L2 > 0.0)) throw ConfigError("domain.L2: must be > 0");
  if (nx <= 0 || nx % 2 != 0) throw ConfigError("domain.nx: must be a positive even integer");
  if (ny <= 0 || ny % 2 != 0) throw ConfigError("domain.ny: must be a positive even integer");
  return TorusGrid{L1, L2, nx, ny};
}

DiskGrid DiskGrid::make(double radius, int n) {
  if (!(radius > 0.0)) throw ConfigError("domain.radius: must be > 0");
  if (n < 9) throw ConfigError("domain.n: disk grid needs at least 9 nodes per side");
  if (n % 2 == 0) throw ConfigError("domain.n: must be odd so the disk center is a node");

  DiskGrid g;
  g.radius = radius;
  g.n = n;
  g.h = 2.0 * radius / (n - 1);
  g.interior.assign(g.nodes(), 0);
  const double r2 = radius * radius;
  for (int iy = 0; iy < n; ++iy) {
    const double y = g.y(iy);
    for (int ix = 0; ix < n; ++ix) {
      const double x = g.x(ix);
      if (x * x + y * y < r2) {
        g.interior[g.idx(ix, iy)] = 1;
        ++g.interior_count;
      }
    }
  }
  return g;
}

MultiField::MultiField(int m, int nx, int ny, double fill)
    : m_(m), nx_(nx), ny_(ny), data_(static_cast<std::size_t>(m) * nx * ny, fill) {}

void MultiField::fill(double value) {
  for (auto& x : data_) x = value;
}

void MultiField::axpy(double alpha, const MultiField& x) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * x.data_[i];
}

void MultiField::scale(double alpha) {
  for (auto& x : data_) x *= alpha;
}

double MultiField::dot(const MultiField& other) const {
  double s = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) s += data_[i] * other.data_[i];
  return s;
}

double MultiField::sup_norm() const {
  double s = 0.0;
  for (double x : data_) s = std::max(s, std::abs(x));
  return s;
}

double MultiField::species_mean(int i) const {
  const double* f = field(i);
  double s = 0.0;
  for (std::size_t n = 0; n < nodes(); ++n) s += f[n];
  return s / static_cast<double>(nodes());
}

}  // namespace abjm
