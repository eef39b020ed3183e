#include "fft.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace synergy::detail {
namespace {

std::vector<std::complex<double>> make_twiddles(std::size_t n) {
  std::vector<std::complex<double>> w(n / 2);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    w[k] = {std::cos(angle), std::sin(angle)};
  }
  return w;
}

}  // namespace

Fft::Fft(std::size_t n) : n_(n), pow2_(std::has_single_bit(n)) {
  if (n_ <= 1) return;
  if (pow2_) {
    twiddles_ = make_twiddles(n_);
    return;
  }
  m_ = std::bit_ceil(2 * n_ - 1);
  twiddles_ = make_twiddles(m_);
  chirp_.resize(n_);
  for (std::size_t k = 0; k < n_; ++k) {
    // k^2 mod 2n keeps the angle argument small
    const auto k2 = static_cast<double>((k * k) % (2 * n_));
    const double angle = -std::numbers::pi * k2 / static_cast<double>(n_);
    chirp_[k] = {std::cos(angle), std::sin(angle)};
  }
  kernel_fft_.assign(m_, {0.0, 0.0});
  kernel_fft_[0] = std::conj(chirp_[0]);
  for (std::size_t k = 1; k < n_; ++k) {
    kernel_fft_[k] = kernel_fft_[m_ - k] = std::conj(chirp_[k]);
  }
  radix2(kernel_fft_, twiddles_);
}

void Fft::radix2(std::span<std::complex<double>> a,
                 std::span<const std::complex<double>> twiddles) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const auto u = a[i + j];
        const auto v = a[i + j + half] * twiddles[j * stride];
        a[i + j] = u + v;
        a[i + j + half] = u - v;
      }
    }
  }
}

void Fft::forward(std::span<std::complex<double>> data) const {
  if (n_ <= 1) return;
  if (pow2_) {
    radix2(data, twiddles_);
    return;
  }
  std::vector<std::complex<double>> buf(m_, {0.0, 0.0});
  for (std::size_t k = 0; k < n_; ++k) buf[k] = data[k] * chirp_[k];
  radix2(buf, twiddles_);
  for (std::size_t k = 0; k < m_; ++k) buf[k] *= kernel_fft_[k];
  // inverse via conjugation
  for (auto& v : buf) v = std::conj(v);
  radix2(buf, twiddles_);
  const double scale = 1.0 / static_cast<double>(m_);
  for (std::size_t k = 0; k < n_; ++k) data[k] = std::conj(buf[k]) * scale * chirp_[k];
}

}  // namespace synergy::detail
