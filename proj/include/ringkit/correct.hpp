#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ringkit/simulate.hpp"
#include "ringkit/tensor.hpp"
#include "ringkit/wavelet.hpp"

namespace ringkit {

// 1-D Gaussian smoothing with a kernel truncated at +-4 sigma and renormalized; half-sample
// symmetric boundary. sigma == 0 returns the input unchanged.
std::vector<double> gaussian_smooth(const std::vector<double>& x, double sigma);

struct WffConfig {
  WaveletSpec wavelet{WaveletFamily::kDb25, 4, Boundary::kSymmetric};
  double damping_sigma = 3.0;
  // Damp H and D bands as well as V.
  bool all_bands = false;

  void validate() const;
};

// Wavelet-Fourier stripe filter: damps low angular frequencies of the detail bands.
Sinogram wff(const Sinogram& sino, const WffConfig& cfg);

// Damping factor 1 - exp(-k^2 / (2 sigma^2)) for signed frequency index k.
double wff_damping(long k, double sigma);

// Objective sum |u - s| + lambda * sum |u[i+1] - u[i]|.
double tv_l1_objective(const std::vector<double>& u, const std::vector<double>& s, double lambda);

struct TvResult {
  std::vector<double> u;
  // Objective of the best iterate seen at each checkpoint (every 10 iterations and at the end).
  std::vector<double> objective_trace;
};

// Primal-dual minimizer of the 1-D TV-L1 objective with tau = sigma = 0.5 / sqrt(2).
TvResult tv_l1_1d_trace(const std::vector<double>& signal, double lambda, std::size_t iters);
std::vector<double> tv_l1_1d(const std::vector<double>& signal, double lambda, std::size_t iters);

struct MpTvgConfig {
  double relax = 0.1;
  double gauss_sigma = 0.5;
  double tv_lambda = 3.0;
  std::size_t outer_iters = 20;
  std::size_t tv_iters = 200;

  void validate() const;
};

// Column-mean stripe estimate: TV-L1 residual of the mean profile, Gaussian smoothed and
// subtracted with relaxation. Operates on any [rows, columns] array with rows along angle.
Tensor mp_tvg_columns(const Tensor& data, const MpTvgConfig& cfg);
Sinogram mp_tvg(const Sinogram& sino, const MpTvgConfig& cfg);

struct PolarGrid {
  std::size_t n_r = 0;
  std::size_t n_theta = 0;
  double r_max_mm = 0.0;
  // Center in pixel coordinates (column, row).
  double center_col = 0.0;
  double center_row = 0.0;

  void validate() const;
  // Grid centered on the image with the largest inscribed radius.
  static PolarGrid centered(const Image2D& image, std::size_t n_r, std::size_t n_theta);
  double radius(std::size_t k) const { return r_max_mm * static_cast<double>(k) / (n_r - 1); }
};

// Output is [n_theta, n_r]: rows are angles, columns radii.
Tensor cart_to_polar(const Image2D& image, const PolarGrid& grid);
Image2D polar_to_cart(const Tensor& polar, const PolarGrid& grid, std::size_t out_size,
                      double pixel_size_mm, const Image2D* background = nullptr);

struct PolarTvConfig {
  std::size_t n_r = 0;      // 0: one sample per pixel of the inscribed radius
  std::size_t n_theta = 0;  // 0: 4 * image width
  double tv_lambda = 3.0;
  std::size_t outer_iters = 20;
  double relax = 0.1;
  double gauss_sigma = 0.5;
  std::size_t tv_iters = 200;

  void validate() const;
};

// Ring correction in polar coordinates using the column-mean procedure along the angle axis.
// Only the estimated correction is mapped back to Cartesian coordinates, so relax == 0
// returns the input exactly.
Image2D polar_tv_lite(const Image2D& image, const PolarTvConfig& cfg);

}  // namespace ringkit
