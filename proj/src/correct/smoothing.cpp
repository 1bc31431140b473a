#include <cmath>

#include "ringkit/correct.hpp"
#include "ringkit/error.hpp"

namespace ringkit {

std::vector<double> gaussian_smooth(const std::vector<double>& x, double sigma) {
  require(sigma >= 0.0, "gaussian_smooth: sigma must be >= 0");
  if (sigma == 0.0 || x.empty()) return x;
  const long radius = static_cast<long>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (long k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));
    total += kernel[k + radius];
  }
  for (double& w : kernel) w /= total;

  const long n = static_cast<long>(x.size());
  auto at = [&](long i) {
    const long period = 2 * n;
    long m = i % period;
    if (m < 0) m += period;
    return x[m < n ? m : period - 1 - m];
  };
  std::vector<double> out(x.size());
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long k = -radius; k <= radius; ++k) acc += kernel[k + radius] * at(i + k);
    out[i] = acc;
  }
  return out;
}

}  // namespace ringkit
