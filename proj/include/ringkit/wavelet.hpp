#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ringkit/tensor.hpp"

namespace ringkit {

enum class WaveletFamily { kHaar, kDb2, kDb25 };
enum class Boundary { kPeriodic, kSymmetric };

std::string to_string(WaveletFamily f);
std::string to_string(Boundary b);
WaveletFamily parse_wavelet_family(const std::string& name);
Boundary parse_boundary(const std::string& name);

struct WaveletSpec {
  WaveletFamily family = WaveletFamily::kHaar;
  std::size_t levels = 1;
  Boundary boundary = Boundary::kPeriodic;
};

// Orthogonal two-channel filter bank. rec_lo is the scaling filter h (sum = sqrt 2);
// dec_lo[j] = h[L-1-j], rec_hi[n] = (-1)^n h[L-1-n], dec_hi[j] = rec_hi[L-1-j].
struct FilterBank {
  std::vector<double> dec_lo, dec_hi, rec_lo, rec_hi;
  std::size_t length() const { return rec_lo.size(); }
};

std::span<const double> scaling_coefficients(WaveletFamily family);
const FilterBank& filter_bank(WaveletFamily family);

// Detail bands of one level. Axis 0 = angle, axis 1 = detector.
//   v: highpass along the detector axis, lowpass along the angle axis (stripe carrier)
//   h: highpass along the angle axis, lowpass along the detector axis
//   d: highpass along both axes
struct DetailBands {
  Tensor v, h, d;
};

struct WaveletPyramid {
  WaveletSpec spec;
  Tensor approx;                                    // level-L lowpass
  std::vector<DetailBands> details;                 // details[l - 1] holds level l (1 = finest)
  std::vector<std::array<std::size_t, 2>> extents;  // input extents seen by each level
};

enum class Band { kApprox, kV, kH, kD };

// Band selector for partial reconstruction. level is 1-based; 0 selects every level.
struct BandSelector {
  Band band;
  std::size_t level = 0;
};

// Periodic: band extents are exact halves and every level's input extents must be even.
// Symmetric: half-sample symmetric extension; band length floor((n + L - 1) / 2) per axis,
// inputs at each level must be at least the filter length.
WaveletPyramid dwt2(const Tensor& image, const WaveletSpec& spec);
Tensor idwt2(const WaveletPyramid& pyramid);
Tensor reconstruct_band_subset(const WaveletPyramid& pyramid, const std::vector<BandSelector>& keep);

// Single-level 1-D transform along axis 0 of a [n, m] array, exposed for the 2-D driver and
// the network's wavelet layers.
void analyze_axis0(const Tensor& x, const FilterBank& fb, Boundary boundary, Tensor& lo, Tensor& hi);
Tensor synthesize_axis0(const Tensor& lo, const Tensor& hi, const FilterBank& fb, Boundary boundary,
                        std::size_t n);
Tensor transpose2(const Tensor& x);

// One RNGK0001 file per band plus manifest.json.
void save_pyramid(const WaveletPyramid& pyramid, const std::filesystem::path& dir);
WaveletPyramid load_pyramid(const std::filesystem::path& dir);

}  // namespace ringkit
