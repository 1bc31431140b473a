#include "ringkit/rng.hpp"

#include <cmath>
#include <numbers>

#include "ringkit/error.hpp"

namespace ringkit {

double rng_normal(Rng& rng, double mu, double sigma) {
  require(sigma >= 0.0, "rng_normal: sigma must be >= 0");
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  if (sigma == 0.0) return mu;
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mu + sigma * z;
}

std::int64_t rng_poisson(Rng& rng, double lambda) {
  require(lambda >= 0.0, "rng_poisson: lambda must be >= 0");
  if (lambda == 0.0) return 0;
  if (lambda < 50.0) {
    // Knuth: multiply uniforms until the product drops below exp(-lambda).
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= rng.uniform();
    } while (p > limit);
    return k - 1;
  }
  const double x = rng_normal(rng, lambda, std::sqrt(lambda));
  return static_cast<std::int64_t>(std::llround(std::max(0.0, x)));
}

}  // namespace ringkit
