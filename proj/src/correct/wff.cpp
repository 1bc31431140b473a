#include <cmath>
#include <complex>

#include "ringkit/correct.hpp"
#include "ringkit/error.hpp"
#include "ringkit/fft.hpp"
#include "ringkit/parallel.hpp"

namespace ringkit {
namespace {

// Damp every column of a band along axis 0 in the Fourier domain.
void damp_columns(Tensor& band, double sigma) {
  const std::size_t n = band.dim(0), m = band.dim(1);
  if (n == 0 || m == 0) return;
  std::vector<double> gain(n / 2 + 1);
  for (std::size_t k = 0; k < gain.size(); ++k) gain[k] = wff_damping(static_cast<long>(k), sigma);
  parallel_for(m, [&](std::size_t begin, std::size_t end) {
    RealFft fft(n);
    std::vector<double> col(n);
    std::vector<std::complex<double>> spec(fft.spectrum_size());
    for (std::size_t j = begin; j < end; ++j) {
      for (std::size_t a = 0; a < n; ++a) col[a] = band(a, j);
      fft.forward(col, spec);
      for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= gain[k];
      fft.inverse(spec, col);
      for (std::size_t a = 0; a < n; ++a) band(a, j) = col[a];
    }
  });
}

}  // namespace

void WffConfig::validate() const {
  if (!(damping_sigma > 0.0)) throw_invalid("wff: damping_sigma must be > 0");
  if (wavelet.levels < 1) throw_invalid("wff: levels must be >= 1");
}

double wff_damping(long k, double sigma) {
  const double kk = static_cast<double>(k);
  return 1.0 - std::exp(-kk * kk / (2.0 * sigma * sigma));
}

Sinogram wff(const Sinogram& sino, const WffConfig& cfg) {
  cfg.validate();
  auto pyr = dwt2(sino.data, cfg.wavelet);
  for (auto& level : pyr.details) {
    damp_columns(level.v, cfg.damping_sigma);
    if (cfg.all_bands) {
      damp_columns(level.h, cfg.damping_sigma);
      damp_columns(level.d, cfg.damping_sigma);
    }
  }
  Sinogram out(sino.geometry, idwt2(pyr));
  out.data.check_finite("wff output");
  return out;
}

}  // namespace ringkit
