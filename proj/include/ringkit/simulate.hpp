#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "ringkit/rng.hpp"
#include "ringkit/tensor.hpp"

namespace ringkit {

// Flat-detector fan-beam geometry. Detector element i sits at
// s_i = (i - (n_det - 1) / 2) * det_spacing_mm along the detector line.
struct FanBeamGeometry {
  double sdd_mm = 425.0;
  double sod_mm = 300.0;
  std::size_t n_det = 2048;
  double det_spacing_mm = 0.075;
  std::size_t n_angles = 384;
  double angle_span_rad = 6.283185307179586;

  static FanBeamGeometry full_scale();
  // 256 detectors x 180 angles; the FOV at the isocenter is ~45 mm.
  static FanBeamGeometry desk_scale();

  void validate() const;
  double detector_position(std::size_t i) const {
    return (static_cast<double>(i) - 0.5 * static_cast<double>(n_det - 1)) * det_spacing_mm;
  }
  double angle(std::size_t a) const {
    return static_cast<double>(a) * angle_span_rad / static_cast<double>(n_angles);
  }
  // Radius of the circle fully covered by the fan at the rotation axis.
  double fov_radius_mm() const;
};

void to_json(nlohmann::json& j, const FanBeamGeometry& g);
void from_json(const nlohmann::json& j, FanBeamGeometry& g);

struct Ellipse {
  double cx_mm = 0.0;
  double cy_mm = 0.0;
  double a_mm = 1.0;
  double b_mm = 1.0;
  double rot_rad = 0.0;
  double delta_mu = 0.0;  // additive attenuation, 1/mm
};

// Overlapping ellipses add their attenuation.
struct EllipsePhantom {
  std::vector<Ellipse> ellipses;

  double attenuation_at(double x_mm, double y_mm) const;
  // Supersampled rasterization onto a square grid centered on the rotation axis.
  Image2D rasterize(std::size_t size, double pixel_size_mm, std::size_t supersample = 4) const;

  static EllipsePhantom centered_disc(double radius_mm, double delta_mu);
  // Shepp-Logan style head phantom scaled to `radius_mm`, attenuation in 1/mm.
  static EllipsePhantom head(double radius_mm, double peak_mu = 0.02);
};

void to_json(nlohmann::json& j, const Ellipse& e);
void from_json(const nlohmann::json& j, Ellipse& e);

// axis 0 = projection angle, axis 1 = detector index.
struct Sinogram {
  FanBeamGeometry geometry;
  Tensor data;

  Sinogram() = default;
  Sinogram(FanBeamGeometry geom, Tensor values);
  explicit Sinogram(const FanBeamGeometry& geom);

  std::size_t n_angles() const { return data.dim(0); }
  std::size_t n_det() const { return data.dim(1); }
  double& operator()(std::size_t a, std::size_t i) { return data(a, i); }
  double operator()(std::size_t a, std::size_t i) const { return data(a, i); }
};

// Per-detector response p' = gain * p + offset + quad * p^2.
struct DetectorErrorModel {
  std::vector<double> gain;
  std::vector<double> offset;
  std::vector<double> quad;

  static DetectorErrorModel identity(std::size_t n_det);
  std::size_t size() const { return gain.size(); }
  void validate() const;
};

void to_json(nlohmann::json& j, const DetectorErrorModel& m);
void from_json(const nlohmann::json& j, DetectorErrorModel& m);

// Ray source position and unit direction for (angle a, detector i).
struct Ray {
  double sx, sy;  // source, mm
  double dx, dy;  // unit direction toward the detector element
};
Ray fan_ray(const FanBeamGeometry& geom, std::size_t a, std::size_t i);

Sinogram project_analytic(const EllipsePhantom& phantom, const FanBeamGeometry& geom);
// Joseph ray-driven projector over a square image centered on the rotation axis.
Sinogram project_discrete(const Image2D& image, const FanBeamGeometry& geom);

// Transmission noise: counts ~ Poisson(i0 exp(-p)), clamped to >= 1, p' = ln(i0 / counts).
// Row a draws from the child stream rng.split(a) of a base stream taken from `rng`.
Sinogram add_poisson_noise(const Sinogram& sino, double i0, Rng& rng);

DetectorErrorModel sample_error_model(std::size_t n_det, double sigma_gain, double sigma_offset,
                                      double sigma_quad, Rng& rng);
Sinogram apply_error_model(const Sinogram& sino, const DetectorErrorModel& model);

}  // namespace ringkit
