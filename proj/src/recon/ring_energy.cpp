#include <algorithm>

#include "ringkit/correct.hpp"
#include "ringkit/error.hpp"
#include "ringkit/recon.hpp"

namespace ringkit {

double ring_energy(const Image2D& image, const PolarGrid& grid) {
  const Tensor polar = cart_to_polar(image, grid);
  std::vector<double> profile(grid.n_r, 0.0);
  for (std::size_t t = 0; t < grid.n_theta; ++t) {
    for (std::size_t k = 0; k < grid.n_r; ++k) profile[k] += polar(t, k);
  }
  for (double& v : profile) v /= static_cast<double>(grid.n_theta);
  // Point-symmetric extension about each end keeps linear trends out of the residual.
  const std::size_t n = profile.size();
  const std::size_t pad = std::min<std::size_t>(n - 1, 12);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t k = pad; k >= 1; --k) ext.push_back(2.0 * profile[0] - profile[k]);
  ext.insert(ext.end(), profile.begin(), profile.end());
  for (std::size_t k = 1; k <= pad; ++k) ext.push_back(2.0 * profile[n - 1] - profile[n - 1 - k]);
  const auto smooth = gaussian_smooth(ext, 3.0);
  double e = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = profile[k] - smooth[k + pad];
    e += d * d;
  }
  return e;
}

double ring_energy(const Image2D& image, std::size_t n_r, std::size_t n_theta) {
  const std::size_t w = image.width();
  const auto grid = PolarGrid::centered(image, n_r != 0 ? n_r : std::max<std::size_t>(2, w / 2),
                                        n_theta != 0 ? n_theta : 4 * w);
  return ring_energy(image, grid);
}

}  // namespace ringkit
