#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "abjm/model.hpp"

namespace abjm {

// Rectangular fundamental cell [0,L1) x [0,L2) with an nx-by-ny periodic
// lattice. Node (ix, iy) sits at (ix*dx, iy*dy); fields are stored
// row-major with ix fastest.
struct TorusGrid {
  double L1 = 1.0;
  double L2 = 1.0;
  int nx = 128;
  int ny = 128;

  static TorusGrid make(double L1, double L2, int nx, int ny);

  double dx() const { return L1 / nx; }
  double dy() const { return L2 / ny; }
  double area() const { return L1 * L2; }
  double cell_area() const { return dx() * dy(); }
  std::size_t nodes() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t idx(int ix, int iy) const { return static_cast<std::size_t>(iy) * nx + ix; }
  double x(int ix) const { return ix * dx(); }
  double y(int iy) const { return iy * dy(); }
};

// Uniform Cartesian grid over the bounding square [-radius, radius]^2 of a
// disk; nodes strictly inside the disk are the unknowns, the rest carry
// prescribed boundary data. n is odd so the center is a node.
struct DiskGrid {
  double radius = 1.0;
  int n = 0;       // nodes per side
  double h = 0.0;  // spacing, 2*radius/(n-1)
  std::vector<std::uint8_t> interior;
  std::size_t interior_count = 0;

  static DiskGrid make(double radius, int n);

  std::size_t nodes() const { return static_cast<std::size_t>(n) * n; }
  std::size_t idx(int ix, int iy) const { return static_cast<std::size_t>(iy) * n + ix; }
  double x(int ix) const { return -radius + ix * h; }
  double y(int iy) const { return -radius + iy * h; }
  double cell_area() const { return h * h; }
  bool is_interior(std::size_t node) const { return interior[node] != 0; }
};

// m scalar fields on a common lattice, stored species-major and contiguous.
class MultiField {
 public:
  MultiField() = default;
  MultiField(int m, int nx, int ny, double fill = 0.0);

  int species() const { return m_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t nodes() const { return static_cast<std::size_t>(nx_) * ny_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* field(int i) { return data_.data() + static_cast<std::size_t>(i) * nodes(); }
  const double* field(int i) const { return data_.data() + static_cast<std::size_t>(i) * nodes(); }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double value);
  void axpy(double alpha, const MultiField& x);  // *this += alpha * x
  void scale(double alpha);
  double dot(const MultiField& other) const;
  double sup_norm() const;
  double species_mean(int i) const;

 private:
  int m_ = 0, nx_ = 0, ny_ = 0;
  std::vector<double> data_;
};

}  // namespace abjm
