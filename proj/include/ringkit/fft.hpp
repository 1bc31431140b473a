#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace ringkit {

// Real-to-complex DFT of fixed length backed by FFTW. One instance per thread;
// plan creation is serialized internally.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  std::size_t spectrum_size() const noexcept { return n_ / 2 + 1; }

  // out[k] = sum_j in[j] exp(-2 pi i j k / n), k = 0..n/2.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  // Inverse including the 1/n normalization.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ringkit
