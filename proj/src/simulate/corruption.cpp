#include <algorithm>
#include <cmath>

#include "ringkit/error.hpp"
#include "ringkit/parallel.hpp"
#include "ringkit/simulate.hpp"

namespace ringkit {

Sinogram add_poisson_noise(const Sinogram& sino, double i0, Rng& rng) {
  require(i0 > 0.0, "add_poisson_noise: i0 must be positive");
  for (double v : sino.data.values()) {
    if (v < 0.0) throw_invalid("add_poisson_noise: negative projection value");
  }
  const Rng base(rng.next_u64());
  Sinogram out = sino;
  const std::size_t n_det = sino.n_det();
  parallel_for(sino.n_angles(), [&](std::size_t a0, std::size_t a1) {
    for (std::size_t a = a0; a < a1; ++a) {
      Rng row = base.split(a);
      for (std::size_t i = 0; i < n_det; ++i) {
        const double expected = i0 * std::exp(-sino(a, i));
        const auto counts = std::max<std::int64_t>(1, rng_poisson(row, expected));
        out(a, i) = std::log(i0 / static_cast<double>(counts));
      }
    }
  });
  return out;
}

DetectorErrorModel sample_error_model(std::size_t n_det, double sigma_gain, double sigma_offset,
                                      double sigma_quad, Rng& rng) {
  require(sigma_gain >= 0.0 && sigma_offset >= 0.0 && sigma_quad >= 0.0,
          "sample_error_model: sigmas must be >= 0");
  DetectorErrorModel m;
  m.gain.resize(n_det);
  m.offset.resize(n_det);
  m.quad.resize(n_det);
  for (std::size_t i = 0; i < n_det; ++i) {
    double g = rng_normal(rng, 1.0, sigma_gain);
    while (g < 0.5 || g > 1.5) g = rng_normal(rng, 1.0, sigma_gain);
    m.gain[i] = g;
    m.offset[i] = rng_normal(rng, 0.0, sigma_offset);
    m.quad[i] = rng_normal(rng, 0.0, sigma_quad);
  }
  return m;
}

Sinogram apply_error_model(const Sinogram& sino, const DetectorErrorModel& model) {
  model.validate();
  require(model.size() == sino.n_det(),
          "apply_error_model: model has " + std::to_string(model.size()) +
              " detectors, sinogram has " + std::to_string(sino.n_det()));
  Sinogram out = sino;
  for (std::size_t a = 0; a < sino.n_angles(); ++a) {
    for (std::size_t i = 0; i < sino.n_det(); ++i) {
      const double p = sino(a, i);
      out(a, i) = model.gain[i] * p + model.offset[i] + model.quad[i] * p * p;
    }
  }
  return out;
}

}  // namespace ringkit
