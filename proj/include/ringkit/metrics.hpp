#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ringkit/simulate.hpp"
#include "ringkit/tensor.hpp"
#include "ringkit/wavelet.hpp"

namespace ringkit {

inline constexpr double kPsnrCapDb = 300.0;

// max(ref) - min(ref); the default data range for PSNR and SSIM.
double data_range_of(const Tensor& ref);

double psnr(const Tensor& x, const Tensor& ref, double data_range);
double ssim(const Tensor& x, const Tensor& ref, double data_range);
double rmse(const Tensor& x, const Tensor& ref);
double rmse_hu(const Tensor& x, const Tensor& ref, double mu_water = 0.02);

struct MetricReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
  double rmse = 0.0;
  std::optional<double> rmse_hu;
  double data_range = 0.0;
};

// data_range <= 0 selects data_range_of(ref). SSIM is computed when both extents are >= 11.
MetricReport evaluate(const Tensor& x, const Tensor& ref, double data_range = 0.0,
                      std::optional<double> mu_water = std::nullopt);

void to_json(nlohmann::json& j, const MetricReport& r);
std::string metric_csv_header();
std::string to_csv_row(const std::string& label, const MetricReport& r);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

struct CouplingProfile {
  std::size_t row = 0;  // detector index
  std::vector<double> p_measured, p_global, p_local;
  // Correlation of |p_local| with p_global over angles where p_global exceeds 5% of its max.
  double pearson_r = 0.0;
  double pearson_r_full = 0.0;
  std::size_t support = 0;
};

// Splits the sinogram into its approximation-only and V-only reconstructions and returns the
// three series at one detector across all angles.
CouplingProfile coupling_profile(const Sinogram& sino, const WaveletSpec& spec, std::size_t row);

std::string to_csv(const CouplingProfile& p);

}  // namespace ringkit
