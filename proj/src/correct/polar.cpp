#include <algorithm>
#include <cmath>
#include <numbers>

#include "ringkit/correct.hpp"
#include "ringkit/error.hpp"
#include "ringkit/parallel.hpp"

namespace ringkit {
namespace {

double bilinear(const Tensor& img, double row, double col) {
  const long h = static_cast<long>(img.dim(0)), w = static_cast<long>(img.dim(1));
  const long r0 = std::clamp(static_cast<long>(std::floor(row)), 0L, h - 2);
  const long c0 = std::clamp(static_cast<long>(std::floor(col)), 0L, w - 2);
  const double fr = row - r0, fc = col - c0;
  return (1 - fr) * ((1 - fc) * img(r0, c0) + fc * img(r0, c0 + 1)) +
         fr * ((1 - fc) * img(r0 + 1, c0) + fc * img(r0 + 1, c0 + 1));
}

}  // namespace

void PolarGrid::validate() const {
  if (n_r < 2) throw_invalid("polar grid: n_r must be >= 2");
  if (n_theta < 4) throw_invalid("polar grid: n_theta must be >= 4");
  if (!(r_max_mm > 0.0)) throw_invalid("polar grid: r_max_mm must be > 0");
}

PolarGrid PolarGrid::centered(const Image2D& image, std::size_t n_r, std::size_t n_theta) {
  PolarGrid g;
  g.center_col = (image.width() - 1) / 2.0;
  g.center_row = (image.height() - 1) / 2.0;
  g.r_max_mm = std::min(g.center_col, g.center_row) * image.pixel_size_mm;
  g.n_r = n_r;
  g.n_theta = n_theta;
  return g;
}

Tensor cart_to_polar(const Image2D& image, const PolarGrid& grid) {
  grid.validate();
  require(image.height() >= 2 && image.width() >= 2, "cart_to_polar: image too small");
  const double rpx = grid.r_max_mm / image.pixel_size_mm;
  const double slack = 1e-9;
  if (grid.center_col - rpx < -slack || grid.center_col + rpx > image.width() - 1 + slack ||
      grid.center_row - rpx < -slack || grid.center_row + rpx > image.height() - 1 + slack) {
    throw_invalid("cart_to_polar: r_max exceeds image bounds");
  }
  Tensor out({grid.n_theta, grid.n_r});
  parallel_for(grid.n_theta, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const double theta = 2.0 * std::numbers::pi * t / grid.n_theta;
      const double ct = std::cos(theta), st = std::sin(theta);
      for (std::size_t k = 0; k < grid.n_r; ++k) {
        const double r = grid.radius(k) / image.pixel_size_mm;
        out(t, k) = bilinear(image.pixels, grid.center_row - r * st, grid.center_col + r * ct);
      }
    }
  });
  return out;
}

Image2D polar_to_cart(const Tensor& polar, const PolarGrid& grid, std::size_t out_size,
                      double pixel_size_mm, const Image2D* background) {
  grid.validate();
  require(polar.rank() == 2 && polar.dim(0) == grid.n_theta && polar.dim(1) == grid.n_r,
          "polar_to_cart: polar array does not match the grid");
  if (background != nullptr) {
    require(background->height() == out_size && background->width() == out_size,
            "polar_to_cart: background size mismatch");
  }
  Image2D out(out_size, out_size, pixel_size_mm);
  const double dr = grid.r_max_mm / (grid.n_r - 1);
  const double dtheta = 2.0 * std::numbers::pi / grid.n_theta;
  parallel_for(out_size, [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      for (std::size_t col = 0; col < out_size; ++col) {
        const double x = (col - grid.center_col) * pixel_size_mm;
        const double y = (grid.center_row - row) * pixel_size_mm;
        const double r = std::hypot(x, y);
        if (r > grid.r_max_mm) {
          out(row, col) = background != nullptr ? (*background)(row, col) : 0.0;
          continue;
        }
        double theta = std::atan2(y, x);
        if (theta < 0) theta += 2.0 * std::numbers::pi;
        const double ft = theta / dtheta;
        const std::size_t t0 = static_cast<std::size_t>(std::floor(ft)) % grid.n_theta;
        const std::size_t t1 = (t0 + 1) % grid.n_theta;
        const double wt = ft - std::floor(ft);
        const double fr = r / dr;
        const std::size_t k0 = std::min(static_cast<std::size_t>(fr), grid.n_r - 2);
        const double wr = fr - k0;
        const double a = (1 - wr) * polar(t0, k0) + wr * polar(t0, k0 + 1);
        const double b = (1 - wr) * polar(t1, k0) + wr * polar(t1, k0 + 1);
        out(row, col) = (1 - wt) * a + wt * b;
      }
    }
  });
  return out;
}

void PolarTvConfig::validate() const {
  if (!(relax >= 0.0 && relax <= 1.0)) throw_invalid("polar_tv_lite: relax must lie in [0, 1]");
  if (!(tv_lambda >= 0.0)) throw_invalid("polar_tv_lite: tv_lambda must be >= 0");
}

Image2D polar_tv_lite(const Image2D& image, const PolarTvConfig& cfg) {
  cfg.validate();
  require(image.height() == image.width(), "polar_tv_lite: image must be square");
  const std::size_t size = image.width();
  const std::size_t n_r = cfg.n_r != 0 ? cfg.n_r : std::max<std::size_t>(2, size / 2);
  const std::size_t n_theta = cfg.n_theta != 0 ? cfg.n_theta : 4 * size;
  const auto grid = PolarGrid::centered(image, n_r, n_theta);

  const Tensor polar = cart_to_polar(image, grid);
  MpTvgConfig inner;
  inner.relax = cfg.relax;
  inner.gauss_sigma = cfg.gauss_sigma;
  inner.tv_lambda = cfg.tv_lambda;
  inner.outer_iters = cfg.outer_iters;
  inner.tv_iters = cfg.tv_iters;
  const Tensor corrected = mp_tvg_columns(polar, inner);

  const Image2D delta = polar_to_cart(corrected - polar, grid, size, image.pixel_size_mm);
  return Image2D(image.pixels + delta.pixels, image.pixel_size_mm);
}

}  // namespace ringkit
