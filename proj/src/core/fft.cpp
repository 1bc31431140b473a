#include "ringkit/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "ringkit/error.hpp"

namespace ringkit {
namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft::Impl {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

RealFft::RealFft(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  require(n >= 2, "RealFft: length must be >= 2");
  std::lock_guard<std::mutex> lock(planner_mutex());
  impl_->real = fftw_alloc_real(n);
  impl_->spec = fftw_alloc_complex(n / 2 + 1);
  const int len = static_cast<int>(n);
  impl_->fwd = fftw_plan_dft_r2c_1d(len, impl_->real, impl_->spec, FFTW_ESTIMATE);
  impl_->inv = fftw_plan_dft_c2r_1d(len, impl_->spec, impl_->real, FFTW_ESTIMATE);
  if (!impl_->fwd || !impl_->inv) throw_numeric("FFTW plan creation failed");
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(impl_->fwd);
  fftw_destroy_plan(impl_->inv);
  fftw_free(impl_->real);
  fftw_free(impl_->spec);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  require(in.size() == n_ && out.size() == spectrum_size(), "RealFft::forward: size mismatch");
  std::copy(in.begin(), in.end(), impl_->real);
  fftw_execute(impl_->fwd);
  std::memcpy(reinterpret_cast<double*>(out.data()), impl_->spec, sizeof(fftw_complex) * spectrum_size());
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  require(in.size() == spectrum_size() && out.size() == n_, "RealFft::inverse: size mismatch");
  std::memcpy(impl_->spec, in.data(), sizeof(fftw_complex) * spectrum_size());
  fftw_execute(impl_->inv);
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = impl_->real[i] * scale;
}

}  // namespace ringkit
