#include <algorithm>
#include <cmath>
#include <sstream>

#include "ringkit/error.hpp"
#include "ringkit/metrics.hpp"

namespace ringkit {
namespace {

void require_same_dims(const Tensor& x, const Tensor& ref, const char* what) {
  if (x.dims() != ref.dims()) {
    throw_invalid(std::string(what) + ": dimension mismatch " + dims_to_string(x.dims()) + " vs " +
                  dims_to_string(ref.dims()));
  }
}

double mean_squared_error(const Tensor& x, const Tensor& ref) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - ref[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

// Valid-mode separable filtering of a 2-D array with a symmetric 1-D kernel.
Tensor filter_valid(const Tensor& img, const std::vector<double>& w) {
  const std::size_t k = w.size(), h = img.dim(0), wd = img.dim(1);
  const std::size_t oh = h - k + 1, ow = wd - k + 1;
  Tensor rows({h, ow});
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += w[j] * img(r, c + j);
      rows(r, c) = acc;
    }
  }
  Tensor out({oh, ow});
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += w[j] * rows(r + j, c);
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace

double data_range_of(const Tensor& ref) {
  require(!ref.empty(), "data_range_of: empty tensor");
  const auto [lo, hi] = std::minmax_element(ref.storage().begin(), ref.storage().end());
  return *hi - *lo;
}

double psnr(const Tensor& x, const Tensor& ref, double data_range) {
  require_same_dims(x, ref, "psnr");
  if (!(data_range > 0.0)) throw_invalid("psnr: data_range must be > 0");
  const double mse = mean_squared_error(x, ref);
  if (mse < 1e-30) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(data_range * data_range / mse));
}

double ssim(const Tensor& x, const Tensor& ref, double data_range) {
  require_same_dims(x, ref, "ssim");
  require(x.rank() == 2, "ssim: expected 2-D images");
  if (x.dim(0) < 11 || x.dim(1) < 11) throw_invalid("ssim: image smaller than the 11x11 window");
  if (!(data_range > 0.0)) throw_invalid("ssim: data_range must be > 0");
  std::vector<double> w(11);
  double total = 0.0;
  for (int i = 0; i < 11; ++i) {
    w[i] = std::exp(-0.5 * (i - 5) * (i - 5) / (1.5 * 1.5));
    total += w[i];
  }
  for (double& v : w) v /= total;

  Tensor xx(x.dims()), yy(x.dims()), xy(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = ref[i] * ref[i];
    xy[i] = x[i] * ref[i];
  }
  const Tensor mx = filter_valid(x, w), my = filter_valid(ref, w);
  const Tensor exx = filter_valid(xx, w), eyy = filter_valid(yy, w), exy = filter_valid(xy, w);
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  double acc = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double sxx = exx[i] - mx[i] * mx[i];
    const double syy = eyy[i] - my[i] * my[i];
    const double sxy = exy[i] - mx[i] * my[i];
    const double num = (2.0 * (mx[i] * my[i]) + c1) * (2.0 * sxy + c2);
    const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (sxx + syy + c2);
    acc += num / den;
  }
  return acc / static_cast<double>(mx.size());
}

double rmse(const Tensor& x, const Tensor& ref) {
  require_same_dims(x, ref, "rmse");
  require(!x.empty(), "rmse: empty tensor");
  return std::sqrt(mean_squared_error(x, ref));
}

double rmse_hu(const Tensor& x, const Tensor& ref, double mu_water) {
  require_same_dims(x, ref, "rmse_hu");
  if (!(mu_water > 0.0)) throw_invalid("rmse_hu: mu_water must be > 0");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double hx = 1000.0 * (x[i] - mu_water) / mu_water;
    const double hr = 1000.0 * (ref[i] - mu_water) / mu_water;
    acc += (hx - hr) * (hx - hr);
  }
  return std::sqrt(acc / static_cast<double>(x.size()));
}

MetricReport evaluate(const Tensor& x, const Tensor& ref, double data_range,
                      std::optional<double> mu_water) {
  MetricReport r;
  r.data_range = data_range > 0.0 ? data_range : data_range_of(ref);
  if (!(r.data_range > 0.0)) throw_numeric("evaluate: reference has zero data range");
  r.psnr_db = psnr(x, ref, r.data_range);
  r.rmse = rmse(x, ref);
  if (x.rank() == 2 && x.dim(0) >= 11 && x.dim(1) >= 11) r.ssim = ssim(x, ref, r.data_range);
  if (mu_water) r.rmse_hu = rmse_hu(x, ref, *mu_water);
  return r;
}

void to_json(nlohmann::json& j, const MetricReport& r) {
  j = nlohmann::json{{"psnr_db", r.psnr_db}, {"ssim", r.ssim}, {"rmse", r.rmse}, {"data_range", r.data_range}};
  j["rmse_hu"] = r.rmse_hu ? nlohmann::json(*r.rmse_hu) : nlohmann::json(nullptr);
}

std::string metric_csv_header() { return "label,psnr_db,ssim,rmse,rmse_hu,data_range\n"; }

std::string to_csv_row(const std::string& label, const MetricReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << label << ',' << r.psnr_db << ',' << r.ssim << ',' << r.rmse << ',';
  if (r.rmse_hu) os << *r.rmse_hu;
  os << ',' << r.data_range << '\n';
  return os.str();
}

}  // namespace ringkit
