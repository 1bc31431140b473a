#include <algorithm>
#include <cmath>
#include <numbers>

#include "ringkit/error.hpp"
#include "ringkit/simulate.hpp"

namespace ringkit {

FanBeamGeometry FanBeamGeometry::full_scale() { return FanBeamGeometry{}; }

FanBeamGeometry FanBeamGeometry::desk_scale() {
  FanBeamGeometry g;
  g.n_det = 256;
  g.det_spacing_mm = 0.25;
  g.n_angles = 180;
  return g;
}

void FanBeamGeometry::validate() const {
  require(sod_mm > 0.0 && sdd_mm > sod_mm, "geometry: need sdd_mm > sod_mm > 0");
  require(n_det >= 2, "geometry: n_det must be >= 2");
  require(n_angles >= 1, "geometry: n_angles must be >= 1");
  require(det_spacing_mm > 0.0, "geometry: det_spacing_mm must be positive");
  require(angle_span_rad > 0.0, "geometry: angle_span_rad must be positive");
}

double FanBeamGeometry::fov_radius_mm() const {
  const double half = 0.5 * static_cast<double>(n_det) * det_spacing_mm;
  return sod_mm * half / std::hypot(sdd_mm, half);
}

void to_json(nlohmann::json& j, const FanBeamGeometry& g) {
  j = nlohmann::json{{"sdd_mm", g.sdd_mm},       {"sod_mm", g.sod_mm},
                     {"n_det", g.n_det},         {"det_spacing_mm", g.det_spacing_mm},
                     {"n_angles", g.n_angles},   {"angle_span_rad", g.angle_span_rad}};
}

void from_json(const nlohmann::json& j, FanBeamGeometry& g) {
  j.at("sdd_mm").get_to(g.sdd_mm);
  j.at("sod_mm").get_to(g.sod_mm);
  j.at("n_det").get_to(g.n_det);
  j.at("det_spacing_mm").get_to(g.det_spacing_mm);
  j.at("n_angles").get_to(g.n_angles);
  j.at("angle_span_rad").get_to(g.angle_span_rad);
}

void to_json(nlohmann::json& j, const Ellipse& e) {
  j = nlohmann::json{{"cx_mm", e.cx_mm}, {"cy_mm", e.cy_mm},     {"a_mm", e.a_mm},
                     {"b_mm", e.b_mm},   {"rot_rad", e.rot_rad}, {"delta_mu", e.delta_mu}};
}

void from_json(const nlohmann::json& j, Ellipse& e) {
  j.at("cx_mm").get_to(e.cx_mm);
  j.at("cy_mm").get_to(e.cy_mm);
  j.at("a_mm").get_to(e.a_mm);
  j.at("b_mm").get_to(e.b_mm);
  j.at("rot_rad").get_to(e.rot_rad);
  j.at("delta_mu").get_to(e.delta_mu);
}

double EllipsePhantom::attenuation_at(double x, double y) const {
  double mu = 0.0;
  for (const auto& e : ellipses) {
    const double c = std::cos(e.rot_rad), s = std::sin(e.rot_rad);
    const double px = x - e.cx_mm, py = y - e.cy_mm;
    const double u = (c * px + s * py) / e.a_mm;
    const double v = (-s * px + c * py) / e.b_mm;
    if (u * u + v * v <= 1.0) mu += e.delta_mu;
  }
  return mu;
}

Image2D EllipsePhantom::rasterize(std::size_t size, double pixel_size, std::size_t supersample) const {
  require(supersample >= 1, "rasterize: supersample must be >= 1");
  Image2D img(size, size, pixel_size);
  const double half = 0.5 * static_cast<double>(size - 1);
  const double inv = 1.0 / static_cast<double>(supersample * supersample);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      double acc = 0.0;
      for (std::size_t sy = 0; sy < supersample; ++sy) {
        for (std::size_t sx = 0; sx < supersample; ++sx) {
          const double ox = (static_cast<double>(sx) + 0.5) / static_cast<double>(supersample) - 0.5;
          const double oy = (static_cast<double>(sy) + 0.5) / static_cast<double>(supersample) - 0.5;
          const double x = (static_cast<double>(c) - half + ox) * pixel_size;
          const double y = (half - static_cast<double>(r) - oy) * pixel_size;
          acc += attenuation_at(x, y);
        }
      }
      img(r, c) = acc * inv;
    }
  }
  return img;
}

EllipsePhantom EllipsePhantom::centered_disc(double radius_mm, double delta_mu) {
  return EllipsePhantom{{Ellipse{0.0, 0.0, radius_mm, radius_mm, 0.0, delta_mu}}};
}

EllipsePhantom EllipsePhantom::head(double radius_mm, double peak_mu) {
  // Modified Shepp-Logan table in unit coordinates: (cx, cy, a, b, rotation deg, relative mu).
  struct Row { double cx, cy, a, b, deg, rel; };
  constexpr Row kRows[] = {
      {0.0, 0.0, 0.69, 0.92, 0.0, 1.0},         {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8},
      {0.22, 0.0, 0.11, 0.31, -18.0, -0.2},     {-0.22, 0.0, 0.16, 0.41, 18.0, -0.2},
      {0.0, 0.35, 0.21, 0.25, 0.0, 0.1},        {0.0, 0.1, 0.046, 0.046, 0.0, 0.1},
      {0.0, -0.1, 0.046, 0.046, 0.0, 0.1},      {-0.08, -0.605, 0.046, 0.023, 0.0, 0.1},
      {0.0, -0.606, 0.023, 0.023, 0.0, 0.1},    {0.06, -0.605, 0.023, 0.046, 0.0, 0.1},
  };
  EllipsePhantom p;
  for (const auto& r : kRows) {
    p.ellipses.push_back(Ellipse{r.cx * radius_mm, r.cy * radius_mm, r.a * radius_mm,
                                 r.b * radius_mm, r.deg * std::numbers::pi / 180.0,
                                 r.rel * peak_mu});
  }
  return p;
}

Sinogram::Sinogram(FanBeamGeometry geom, Tensor values) : geometry(geom), data(std::move(values)) {
  require(data.rank() == 2 && data.dim(0) == geometry.n_angles && data.dim(1) == geometry.n_det,
          "sinogram dims " + dims_to_string(data.dims()) + " do not match geometry [" +
              std::to_string(geometry.n_angles) + "," + std::to_string(geometry.n_det) + "]");
}

Sinogram::Sinogram(const FanBeamGeometry& geom)
    : geometry(geom), data({geom.n_angles, geom.n_det}, 0.0) {}

DetectorErrorModel DetectorErrorModel::identity(std::size_t n_det) {
  return DetectorErrorModel{std::vector<double>(n_det, 1.0), std::vector<double>(n_det, 0.0),
                            std::vector<double>(n_det, 0.0)};
}

void DetectorErrorModel::validate() const {
  require(gain.size() == offset.size() && gain.size() == quad.size(),
          "error model: gain/offset/quad lengths differ");
  for (double g : gain) require(g > 0.0, "error model: gain must be positive");
}

void to_json(nlohmann::json& j, const DetectorErrorModel& m) {
  j = nlohmann::json{{"gain", m.gain}, {"offset", m.offset}, {"quad", m.quad}};
}

void from_json(const nlohmann::json& j, DetectorErrorModel& m) {
  j.at("gain").get_to(m.gain);
  j.at("offset").get_to(m.offset);
  m.quad = j.contains("quad") ? j.at("quad").get<std::vector<double>>()
                              : std::vector<double>(m.gain.size(), 0.0);
}

Ray fan_ray(const FanBeamGeometry& geom, std::size_t a, std::size_t i) {
  const double beta = geom.angle(a);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double sx = geom.sod_mm * cb, sy = geom.sod_mm * sb;
  const double s = geom.detector_position(i);
  // Detector point: source + sdd along the central ray (-cb, -sb) + s along (-sb, cb).
  const double px = sx - geom.sdd_mm * cb - s * sb;
  const double py = sy - geom.sdd_mm * sb + s * cb;
  const double len = std::hypot(px - sx, py - sy);
  return Ray{sx, sy, (px - sx) / len, (py - sy) / len};
}

}  // namespace ringkit
