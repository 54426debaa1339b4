#include "abjm/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>
#include <vector>

namespace abjm {

namespace {
// FFTW plan creation/destruction is not thread safe; execution on private
// buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct PeriodicSpectral::Impl {
  int nx = 0, ny = 0;
  double dx = 0.0, dy = 0.0;
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  std::vector<double> symbol;  // eigenvalues of -Laplacian_h per half-spectrum mode

  ~Impl() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
    if (real) fftw_free(real);
    if (cplx) fftw_free(cplx);
  }
};

PeriodicSpectral::PeriodicSpectral(const TorusGrid& grid) : impl_(new Impl) {
  impl_->nx = grid.nx;
  impl_->ny = grid.ny;
  impl_->dx = grid.dx();
  impl_->dy = grid.dy();

  const int nxc = grid.nx / 2 + 1;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    impl_->real = fftw_alloc_real(static_cast<std::size_t>(grid.nx) * grid.ny);
    impl_->cplx = fftw_alloc_complex(static_cast<std::size_t>(nxc) * grid.ny);
    // FFTW convention: first dimension is the slowest varying (rows = ny).
    impl_->fwd = fftw_plan_dft_r2c_2d(grid.ny, grid.nx, impl_->real, impl_->cplx, FFTW_ESTIMATE);
    impl_->inv = fftw_plan_dft_c2r_2d(grid.ny, grid.nx, impl_->cplx, impl_->real, FFTW_ESTIMATE);
  }

  impl_->symbol.resize(static_cast<std::size_t>(nxc) * grid.ny);
  const double cx = 2.0 * std::numbers::pi / grid.nx;
  const double cy = 2.0 * std::numbers::pi / grid.ny;
  const double ax = 1.0 / (impl_->dx * impl_->dx);
  const double ay = 1.0 / (impl_->dy * impl_->dy);
  for (int ky = 0; ky < grid.ny; ++ky) {
    for (int kx = 0; kx < nxc; ++kx) {
      impl_->symbol[static_cast<std::size_t>(ky) * nxc + kx] =
          ax * (2.0 - 2.0 * std::cos(cx * kx)) + ay * (2.0 - 2.0 * std::cos(cy * ky));
    }
  }
}

PeriodicSpectral::~PeriodicSpectral() = default;

int PeriodicSpectral::nx() const { return impl_->nx; }
int PeriodicSpectral::ny() const { return impl_->ny; }
int PeriodicSpectral::modes() const { return (impl_->nx / 2 + 1) * impl_->ny; }

double PeriodicSpectral::laplacian_symbol(int mode) const { return impl_->symbol[mode]; }

void PeriodicSpectral::forward(const double* in, std::complex<double>* out) {
  const std::size_t nn = static_cast<std::size_t>(impl_->nx) * impl_->ny;
  std::memcpy(impl_->real, in, nn * sizeof(double));
  fftw_execute(impl_->fwd);
  std::memcpy(out, impl_->cplx, static_cast<std::size_t>(modes()) * sizeof(fftw_complex));
}

void PeriodicSpectral::inverse(const std::complex<double>* in, double* out) {
  std::memcpy(impl_->cplx, in, static_cast<std::size_t>(modes()) * sizeof(fftw_complex));
  fftw_execute(impl_->inv);
  const std::size_t nn = static_cast<std::size_t>(impl_->nx) * impl_->ny;
  const double scale = 1.0 / static_cast<double>(nn);
  for (std::size_t i = 0; i < nn; ++i) out[i] = impl_->real[i] * scale;
}

void PeriodicSpectral::poisson_mean_zero(const double* f, double* u) {
  const std::size_t nn = static_cast<std::size_t>(impl_->nx) * impl_->ny;
  std::memcpy(impl_->real, f, nn * sizeof(double));
  fftw_execute(impl_->fwd);
  const int nm = modes();
  for (int k = 0; k < nm; ++k) {
    const double sym = impl_->symbol[k];
    if (sym == 0.0) {
      impl_->cplx[k][0] = 0.0;  // zero-mean gauge
      impl_->cplx[k][1] = 0.0;
    } else {
      impl_->cplx[k][0] /= -sym;
      impl_->cplx[k][1] /= -sym;
    }
  }
  fftw_execute(impl_->inv);
  const double scale = 1.0 / static_cast<double>(nn);
  for (std::size_t i = 0; i < nn; ++i) u[i] = impl_->real[i] * scale;
}

}  // namespace abjm
