#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ringkit/correct.hpp"
#include "ringkit/simulate.hpp"
#include "ringkit/tensor.hpp"

namespace ringkit {

enum class ReconFilter { kRamLak, kHamming };

std::string to_string(ReconFilter f);
ReconFilter parse_recon_filter(const std::string& name);

struct ReconConfig {
  std::size_t out_size = 512;
  // 0 selects the pitch that maps the field of view onto the image.
  double pixel_size_mm = 0.0;
  ReconFilter filter = ReconFilter::kHamming;
  std::size_t pad_factor = 8;

  void validate() const;
  double resolved_pixel_size(const FanBeamGeometry& geom) const;
};

std::size_t next_pow2(std::size_t n);

// Half spectrum (padded_length / 2 + 1 bins) of the ramp filter, optionally Hamming windowed.
// Bin k sits at frequency k / (padded_length * det_spacing_mm).
std::vector<double> build_filter(std::size_t n_det, double det_spacing_mm, ReconFilter filter,
                                 std::size_t pad_factor = 2);

// Flat-detector fan-beam filtered backprojection over a full circular scan.
Image2D fbp(const Sinogram& sino, const ReconConfig& cfg);

// Energy of narrow oscillations in the angularly averaged radial profile. n_r and n_theta
// default (0) to half and four times the image width.
double ring_energy(const Image2D& image, std::size_t n_r = 0, std::size_t n_theta = 0);
double ring_energy(const Image2D& image, const PolarGrid& grid);

}  // namespace ringkit
