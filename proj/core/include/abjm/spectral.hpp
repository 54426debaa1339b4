#pragma once

#include <complex>
#include <cstddef>
#include <memory>

#include "abjm/geometry.hpp"

namespace abjm {

// FFT diagonalization of the periodic 5-point Laplacian on a TorusGrid.
// Backed by FFTW (FFTW_ESTIMATE plans, so repeated runs are bit-identical).
// One instance stages its own aligned buffers; do not share a single
// instance between threads. Distinct instances are independent.
class PeriodicSpectral {
 public:
  explicit PeriodicSpectral(const TorusGrid& grid);
  ~PeriodicSpectral();

  PeriodicSpectral(const PeriodicSpectral&) = delete;
  PeriodicSpectral& operator=(const PeriodicSpectral&) = delete;

  int nx() const;
  int ny() const;
  int modes() const;  // ny * (nx/2 + 1) half-spectrum modes

  // Eigenvalue of -Laplacian_h for half-spectrum mode index (kx + (nx/2+1)*ky).
  double laplacian_symbol(int mode) const;

  // Solves Laplacian_h u = f for mean-zero f; the result is gauge-fixed to
  // zero mean. f and u may alias.
  void poisson_mean_zero(const double* f, double* u);

  // Unnormalized r2c forward transform and normalized c2r inverse.
  void forward(const double* in, std::complex<double>* out);
  void inverse(const std::complex<double>* in, double* out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace abjm
