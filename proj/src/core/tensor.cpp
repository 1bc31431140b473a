#include "ringkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "ringkit/error.hpp"

namespace ringkit {

std::size_t dims_product(const Dims& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string dims_to_string(const Dims& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Dims dims, double fill) : dims_(std::move(dims)), data_(dims_product(dims_), fill) {}

Tensor::Tensor(Dims dims, std::vector<double> data) : dims_(std::move(dims)), data_(std::move(data)) {
  require(dims_product(dims_) == data_.size(),
          "tensor data length " + std::to_string(data_.size()) + " does not match dims " +
              dims_to_string(dims_));
}

Tensor Tensor::reshaped(Dims dims) const {
  require(dims_product(dims) == data_.size(),
          "reshape " + dims_to_string(dims_) + " -> " + dims_to_string(dims) + " changes size");
  return Tensor(std::move(dims), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::check_finite(const std::string& context) const {
  if (!all_finite()) throw_numeric("non-finite value in " + context);
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  require(a.dims() == b.dims(), "tensor add: dims " + dims_to_string(a.dims()) + " vs " +
                                    dims_to_string(b.dims()));
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require(a.dims() == b.dims(), "tensor sub: dims " + dims_to_string(a.dims()) + " vs " +
                                    dims_to_string(b.dims()));
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor operator*(double s, const Tensor& a) {
  Tensor out = a;
  for (auto& v : out.storage()) v *= s;
  return out;
}

double sum(const Tensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v;
  return s;
}

double sum_squares(const Tensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v * v;
  return s;
}

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double v : t.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require(a.size() == b.size(), "max_abs_diff: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double relative_l2(const Tensor& a, const Tensor& b) {
  require(a.size() == b.size(), "relative_l2: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

bool bit_identical(const Tensor& a, const Tensor& b) {
  return a.dims() == b.dims() &&
         (a.size() == 0 || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

Image2D::Image2D(std::size_t height, std::size_t width, double pixel_size, double fill)
    : pixels({height, width}, fill), pixel_size_mm(pixel_size) {
  require(pixel_size > 0.0, "pixel_size_mm must be positive");
}

Image2D::Image2D(Tensor px, double pixel_size) : pixels(std::move(px)), pixel_size_mm(pixel_size) {
  require(pixels.rank() == 2, "Image2D needs a rank-2 tensor, got " + dims_to_string(pixels.dims()));
  require(pixel_size > 0.0, "pixel_size_mm must be positive");
}

}  // namespace ringkit
