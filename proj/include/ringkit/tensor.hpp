#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ringkit {

using Dims = std::vector<std::size_t>;

std::size_t dims_product(const Dims& dims);
std::string dims_to_string(const Dims& dims);

// Dense row-major array of f64 values.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Dims dims, double fill = 0.0);
  Tensor(Dims dims, std::vector<double> data);

  const Dims& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  // 2-D access; valid for rank-2 tensors only.
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * dims_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * dims_[1] + c]; }

  // 4-D access for [batch, channel, height, width] feature maps.
  double& at4(std::size_t b, std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data_[((b * dims_[1] + c) * dims_[2] + y) * dims_[3] + x];
  }
  double at4(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[((b * dims_[1] + c) * dims_[2] + y) * dims_[3] + x];
  }

  // Same data, new extents; the element count must not change.
  Tensor reshaped(Dims dims) const;
  void fill(double v);

  bool all_finite() const noexcept;
  // Throws a numeric error naming `context` when any value is NaN or Inf.
  void check_finite(const std::string& context) const;

 private:
  Dims dims_;
  std::vector<double> data_;
};

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& a);

double sum(const Tensor& t);
double sum_squares(const Tensor& t);
double max_abs(const Tensor& t);
double max_abs_diff(const Tensor& a, const Tensor& b);
// ||a - b|| / ||b||
double relative_l2(const Tensor& a, const Tensor& b);
bool bit_identical(const Tensor& a, const Tensor& b);

// Square or rectangular reconstruction image with a physical pixel pitch.
struct Image2D {
  Tensor pixels;  // [height, width]
  double pixel_size_mm = 1.0;

  Image2D() = default;
  Image2D(std::size_t height, std::size_t width, double pixel_size_mm, double fill = 0.0);
  Image2D(Tensor pixels, double pixel_size_mm);

  std::size_t height() const { return pixels.dim(0); }
  std::size_t width() const { return pixels.dim(1); }
  double& operator()(std::size_t r, std::size_t c) noexcept { return pixels(r, c); }
  double operator()(std::size_t r, std::size_t c) const noexcept { return pixels(r, c); }
};

}  // namespace ringkit
