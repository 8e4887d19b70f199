#include "pkslab/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>

#include "pkslab/error.hpp"

namespace pkslab::spectral {

namespace {
// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Fft2D::Impl {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

Fft2D::Fft2D(int n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n < 2 || (n & (n - 1)) != 0) throw InvalidArgument("FFT size must be a power of two");
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  std::lock_guard lock(planner_mutex());
  impl_->real = fftw_alloc_real(nn);
  impl_->spec = fftw_alloc_complex(spectral_size());
  impl_->r2c = fftw_plan_dft_r2c_2d(n, n, impl_->real, impl_->spec, FFTW_ESTIMATE);
  impl_->c2r = fftw_plan_dft_c2r_2d(n, n, impl_->spec, impl_->real, FFTW_ESTIMATE);
  if (!impl_->r2c || !impl_->c2r) throw InvalidArgument("FFTW planning failed");
}

Fft2D::~Fft2D() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(impl_->r2c);
  fftw_destroy_plan(impl_->c2r);
  fftw_free(impl_->real);
  fftw_free(impl_->spec);
}

void Fft2D::forward(std::span<const double> in, std::span<cplx> out) {
  std::memcpy(impl_->real, in.data(), sizeof(double) * in.size());
  fftw_execute(impl_->r2c);
  std::memcpy(static_cast<void*>(out.data()), impl_->spec, sizeof(fftw_complex) * spectral_size());
}

void Fft2D::inverse(std::span<const cplx> in, std::span<double> out) {
  // c2r overwrites its input, hence the staging copy.
  std::memcpy(impl_->spec, in.data(), sizeof(fftw_complex) * spectral_size());
  fftw_execute(impl_->c2r);
  const double scale = 1.0 / (static_cast<double>(n_) * n_);
  const std::size_t nn = static_cast<std::size_t>(n_) * n_;
  for (std::size_t i = 0; i < nn; ++i) out[i] = impl_->real[i] * scale;
}

Fft2D& fft(int n) {
  thread_local std::map<int, std::unique_ptr<Fft2D>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_unique<Fft2D>(n)).first;
  return *it->second;
}

std::vector<double> wavenumbers(int n, double period, bool half_axis, bool odd_derivative) {
  const int count = half_axis ? n / 2 + 1 : n;
  std::vector<double> k(count);
  for (int m = 0; m < count; ++m) {
    const int mm = half_axis ? m : mode_number(m, n);
    k[m] = 2.0 * M_PI * mm / period;
    if (odd_derivative && std::abs(mm) == n / 2) k[m] = 0.0;
  }
  return k;
}

std::vector<unsigned char> dealias_mask(int n, double keep_fraction) {
  const int half = n / 2 + 1;
  const double cutoff = keep_fraction * (n / 2);
  std::vector<unsigned char> mask(static_cast<std::size_t>(n) * half, 0);
  for (int iy = 0; iy < n; ++iy) {
    const int my = std::abs(mode_number(iy, n));
    for (int ix = 0; ix < half; ++ix) {
      mask[static_cast<std::size_t>(iy) * half + ix] = (ix <= cutoff && my <= cutoff) ? 1 : 0;
    }
  }
  return mask;
}

std::vector<double> exponential_filter(int n) {
  const int half = n / 2 + 1;
  std::vector<double> axis(n);
  for (int i = 0; i < n; ++i) axis[i] = std::exp(-36.0 * std::pow(std::abs(mode_number(i, n)) / (0.5 * n), 36));
  std::vector<double> w(static_cast<std::size_t>(n) * half);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < half; ++ix) w[static_cast<std::size_t>(iy) * half + ix] = axis[iy] * axis[ix];
  return w;
}

}  // namespace pkslab::spectral
