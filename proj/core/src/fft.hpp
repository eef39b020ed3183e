#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace synergy::detail {

// Forward DFT of one length, unnormalized (X_k = sum x_n e^{-2 pi i kn/N}).
// Radix-2 for powers of two, Bluestein's chirp-z otherwise.
class Fft {
 public:
  explicit Fft(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  void forward(std::span<std::complex<double>> data) const;

 private:
  static void radix2(std::span<std::complex<double>> data,
                     std::span<const std::complex<double>> twiddles);

  std::size_t n_ = 0;
  bool pow2_ = true;
  std::vector<std::complex<double>> twiddles_;  // for length n_ or m_
  // Bluestein state
  std::size_t m_ = 0;
  std::vector<std::complex<double>> chirp_;
  std::vector<std::complex<double>> kernel_fft_;
};

}  // namespace synergy::detail
