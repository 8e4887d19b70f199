#pragma once

// Thin RAII layer over FFTW real 2D transforms plus wavenumber helpers.
// Spectral arrays use the half-complex layout: index iy * (n/2 + 1) + ix.

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace pkslab::spectral {

using cplx = std::complex<double>;

class Fft2D {
 public:
  explicit Fft2D(int n);
  ~Fft2D();
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;

  int n() const { return n_; }
  int half() const { return n_ / 2 + 1; }
  std::size_t spectral_size() const { return static_cast<std::size_t>(n_) * half(); }

  /// Unnormalized forward transform of n*n real samples.
  void forward(std::span<const double> in, std::span<cplx> out);
  /// Inverse transform including the 1/n^2 normalization.
  void inverse(std::span<const cplx> in, std::span<double> out);

 private:
  int n_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Per-thread cached transform for size n.
Fft2D& fft(int n);

/// Signed mode number for storage index m of an n-point axis.
inline int mode_number(int m, int n) { return m <= n / 2 ? m : m - n; }

/// Angular wavenumbers for an axis with n points and period `period`.
/// `odd_derivative` zeroes the Nyquist mode (for first derivatives).
std::vector<double> wavenumbers(int n, double period, bool half_axis, bool odd_derivative);

/// Mask for the 2/3 dealiasing rule on the half-complex layout.
std::vector<unsigned char> dealias_mask(int n, double keep_fraction);
/// Smooth alternative, exp(-36 (|k|/k_N)^36) per axis (Hou and Li): keeps
/// most modes and does not ring when the flux is marginally resolved.
std::vector<double> exponential_filter(int n);

}  // namespace pkslab::spectral
