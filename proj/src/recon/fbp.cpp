#include <cmath>
#include <complex>
#include <numbers>

#include "ringkit/error.hpp"
#include "ringkit/fft.hpp"
#include "ringkit/parallel.hpp"
#include "ringkit/recon.hpp"

namespace ringkit {

std::string to_string(ReconFilter f) { return f == ReconFilter::kRamLak ? "ramlak" : "hamming"; }

ReconFilter parse_recon_filter(const std::string& name) {
  if (name == "ramlak") return ReconFilter::kRamLak;
  if (name == "hamming") return ReconFilter::kHamming;
  throw_invalid("unknown recon filter '" + name + "' (valid: ramlak, hamming)");
}

void ReconConfig::validate() const {
  if (out_size < 2) throw_invalid("recon: out_size must be >= 2");
  if (pixel_size_mm < 0.0 || !std::isfinite(pixel_size_mm)) {
    throw_invalid("recon: pixel_size_mm must be > 0 (or 0 for automatic)");
  }
  if (pad_factor < 1) throw_invalid("recon: pad_factor must be >= 1");
}

double ReconConfig::resolved_pixel_size(const FanBeamGeometry& geom) const {
  if (pixel_size_mm > 0.0) return pixel_size_mm;
  return geom.n_det * geom.det_spacing_mm * geom.sod_mm / geom.sdd_mm / out_size;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> build_filter(std::size_t n_det, double det_spacing_mm, ReconFilter filter,
                                 std::size_t pad_factor) {
  require(n_det >= 2, "build_filter: n_det must be >= 2");
  require(det_spacing_mm > 0.0, "build_filter: det_spacing_mm must be > 0");
  const std::size_t padded = pad_factor * next_pow2(n_det);
  const double nyquist = 0.5 / det_spacing_mm;
  std::vector<double> response(padded / 2 + 1);
  for (std::size_t k = 0; k < response.size(); ++k) {
    const double f = static_cast<double>(k) / (padded * det_spacing_mm);
    double r = f;
    if (filter == ReconFilter::kHamming) r *= 0.54 + 0.46 * std::cos(std::numbers::pi * f / nyquist);
    response[k] = r;
  }
  response[0] = 0.0;
  return response;
}

Image2D fbp(const Sinogram& sino, const ReconConfig& cfg) {
  cfg.validate();
  const FanBeamGeometry& g = sino.geometry;
  g.validate();
  require(sino.data.rank() == 2 && sino.n_angles() == g.n_angles && sino.n_det() == g.n_det,
          "fbp: sinogram dims do not match geometry");
  if (std::abs(g.angle_span_rad - 2.0 * std::numbers::pi) > 1e-9) {
    throw_invalid("fbp: a full 2*pi scan is required");
  }
  const std::size_t n_a = g.n_angles, n_d = g.n_det;
  const auto response = build_filter(n_d, g.det_spacing_mm, cfg.filter, cfg.pad_factor);
  const std::size_t padded = 2 * (response.size() - 1);

  // Cosine weighting and ramp filtering, one row per angle.
  Tensor filtered({n_a, n_d});
  std::vector<double> cosw(n_d);
  for (std::size_t i = 0; i < n_d; ++i) {
    const double s = g.detector_position(i);
    cosw[i] = g.sdd_mm / std::sqrt(g.sdd_mm * g.sdd_mm + s * s);
  }
  parallel_for(n_a, [&](std::size_t begin, std::size_t end) {
    RealFft fft(padded);
    std::vector<double> row(padded);
    std::vector<std::complex<double>> spec(fft.spectrum_size());
    for (std::size_t a = begin; a < end; ++a) {
      std::fill(row.begin(), row.end(), 0.0);
      for (std::size_t i = 0; i < n_d; ++i) row[i] = sino(a, i) * cosw[i];
      fft.forward(row, spec);
      for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= response[k];
      fft.inverse(spec, row);
      for (std::size_t i = 0; i < n_d; ++i) filtered(a, i) = row[i];
    }
  });

  const std::size_t n = cfg.out_size;
  const double ps = cfg.resolved_pixel_size(g);
  const double half = 0.5 * static_cast<double>(n - 1);
  const double dbeta = g.angle_span_rad / n_a;
  std::vector<double> cb(n_a), sb(n_a);
  for (std::size_t a = 0; a < n_a; ++a) {
    cb[a] = std::cos(g.angle(a));
    sb[a] = std::sin(g.angle(a));
  }
  const double u0 = g.detector_position(0);
  const double scale = 0.5 * dbeta * g.sdd_mm * g.sod_mm;

  Image2D out(n, n, ps);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const double y = (half - r) * ps;
      for (std::size_t c = 0; c < n; ++c) {
        const double x = (c - half) * ps;
        double acc = 0.0;
        for (std::size_t a = 0; a < n_a; ++a) {
          const double L = g.sod_mm - (x * cb[a] + y * sb[a]);
          const double t = -x * sb[a] + y * cb[a];
          const double u = g.sdd_mm * t / L;
          const double fi = (u - u0) / g.det_spacing_mm;
          if (fi < 0.0 || fi > static_cast<double>(n_d - 1)) continue;
          const std::size_t i0 = std::min(static_cast<std::size_t>(fi), n_d - 2);
          const double w = fi - i0;
          const double v = (1.0 - w) * filtered(a, i0) + w * filtered(a, i0 + 1);
          acc += v / (L * L);
        }
        out(r, c) = scale * acc;
      }
    }
  });
  out.pixels.check_finite("fbp output");
  return out;
}

}  // namespace ringkit
