#include <algorithm>
#include <cmath>
#include <sstream>

#include "ringkit/error.hpp"
#include "ringkit/parallel.hpp"
#include "ringkit/simulate.hpp"

namespace ringkit {
namespace {

// Chord length of the line (sx, sy) + t (dx, dy), |d| = 1, through the ellipse.
double chord_length(const Ellipse& e, const Ray& ray) {
  const double c = std::cos(e.rot_rad), s = std::sin(e.rot_rad);
  const double px = ray.sx - e.cx_mm, py = ray.sy - e.cy_mm;
  const double pu = (c * px + s * py) / e.a_mm;
  const double pv = (-s * px + c * py) / e.b_mm;
  const double du = (c * ray.dx + s * ray.dy) / e.a_mm;
  const double dv = (-s * ray.dx + c * ray.dy) / e.b_mm;
  const double qa = du * du + dv * dv;
  const double qb = 2.0 * (pu * du + pv * dv);
  const double qc = pu * pu + pv * pv - 1.0;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc <= 0.0) return 0.0;
  return std::sqrt(disc) / qa;
}

}  // namespace

Sinogram project_analytic(const EllipsePhantom& phantom, const FanBeamGeometry& geom) {
  geom.validate();
  for (std::size_t k = 0; k < phantom.ellipses.size(); ++k) {
    const auto& e = phantom.ellipses[k];
    require(e.a_mm > 0.0 && e.b_mm > 0.0, "ellipse " + std::to_string(k) + ": axes must be positive");
    const double extent = std::hypot(e.cx_mm, e.cy_mm) + std::max(e.a_mm, e.b_mm);
    if (extent >= geom.sod_mm) {
      std::ostringstream os;
      os << "phantom outside field of view: ellipse " << k << " (cx=" << e.cx_mm
         << ", cy=" << e.cy_mm << ", a=" << e.a_mm << ", b=" << e.b_mm
         << ") reaches " << extent << " mm >= sod " << geom.sod_mm << " mm";
      throw_invalid(os.str());
    }
  }
  Sinogram sino(geom);
  parallel_for(geom.n_angles, [&](std::size_t a0, std::size_t a1) {
    for (std::size_t a = a0; a < a1; ++a) {
      for (std::size_t i = 0; i < geom.n_det; ++i) {
        const Ray ray = fan_ray(geom, a, i);
        double p = 0.0;
        for (const auto& e : phantom.ellipses) p += e.delta_mu * chord_length(e, ray);
        sino(a, i) = p;
      }
    }
  });
  return sino;
}

Sinogram project_discrete(const Image2D& image, const FanBeamGeometry& geom) {
  geom.validate();
  require(image.height() == image.width(),
          "project_discrete: image must be square, got " + dims_to_string(image.pixels.dims()));
  const std::size_t n = image.width();
  const long ni = static_cast<long>(n);
  const double ps = image.pixel_size_mm;
  const double half = 0.5 * static_cast<double>(n - 1);
  const double* img = image.pixels.data();
  Sinogram sino(geom);

  parallel_for(geom.n_angles, [&](std::size_t a0, std::size_t a1) {
    for (std::size_t a = a0; a < a1; ++a) {
      for (std::size_t i = 0; i < geom.n_det; ++i) {
        const Ray ray = fan_ray(geom, a, i);
        double acc = 0.0;
        if (std::abs(ray.dx) >= std::abs(ray.dy)) {
          // x-dominant: one sample per column, interpolate between rows.
          for (long c = 0; c < ni; ++c) {
            const double x = (static_cast<double>(c) - half) * ps;
            const double y = ray.sy + (x - ray.sx) / ray.dx * ray.dy;
            const double rf = half - y / ps;
            const double r0f = std::floor(rf);
            const long r0 = static_cast<long>(r0f);
            if (r0 < -1 || r0 >= ni) continue;
            const double w = rf - r0f;
            if (r0 >= 0) acc += (1.0 - w) * img[r0 * ni + c];
            if (r0 + 1 < ni) acc += w * img[(r0 + 1) * ni + c];
          }
          acc *= ps / std::abs(ray.dx);
        } else {
          for (long r = 0; r < ni; ++r) {
            const double y = (half - static_cast<double>(r)) * ps;
            const double x = ray.sx + (y - ray.sy) / ray.dy * ray.dx;
            const double cf = x / ps + half;
            const double c0f = std::floor(cf);
            const long c0 = static_cast<long>(c0f);
            if (c0 < -1 || c0 >= ni) continue;
            const double w = cf - c0f;
            if (c0 >= 0) acc += (1.0 - w) * img[r * ni + c0];
            if (c0 + 1 < ni) acc += w * img[r * ni + c0 + 1];
          }
          acc *= ps / std::abs(ray.dy);
        }
        sino(a, i) = acc;
      }
    }
  });
  return sino;
}

}  // namespace ringkit
