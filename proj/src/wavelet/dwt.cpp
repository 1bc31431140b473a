#include <algorithm>

#include "ringkit/error.hpp"
#include "ringkit/simd.hpp"
#include "ringkit/wavelet.hpp"

namespace ringkit {
namespace {

// Half-sample symmetric reflection into [0, n).
std::size_t reflect(long idx, long n) {
  const long period = 2 * n;
  long m = idx % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < n ? m : period - 1 - m);
}

std::size_t wrap(long idx, long n) {
  long m = idx % n;
  if (m < 0) m += n;
  return static_cast<std::size_t>(m);
}

std::size_t band_length(std::size_t n, std::size_t filter_len, Boundary boundary) {
  return boundary == Boundary::kPeriodic ? n / 2 : (n + filter_len - 1) / 2;
}

void check_level_input(std::size_t rows, std::size_t cols, const WaveletSpec& spec,
                       std::size_t level) {
  const std::size_t len = filter_bank(spec.family).length();
  const std::string where = "dwt2 level " + std::to_string(level) + ": extents [" +
                            std::to_string(rows) + "," + std::to_string(cols) + "]";
  if (spec.boundary == Boundary::kPeriodic) {
    if (rows < 2 || cols < 2 || rows % 2 != 0 || cols % 2 != 0) {
      throw_invalid(where + " must be even under periodic boundary");
    }
  } else if (rows < len || cols < len) {
    throw_invalid(where + " smaller than filter length " + std::to_string(len));
  }
}

}  // namespace

Tensor transpose2(const Tensor& x) {
  const std::size_t r = x.dim(0), c = x.dim(1);
  Tensor t({c, r});
  constexpr std::size_t kBlock = 32;
  for (std::size_t i0 = 0; i0 < r; i0 += kBlock) {
    for (std::size_t j0 = 0; j0 < c; j0 += kBlock) {
      const std::size_t i1 = std::min(r, i0 + kBlock), j1 = std::min(c, j0 + kBlock);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) t[j * r + i] = x[i * c + j];
      }
    }
  }
  return t;
}

void analyze_axis0(const Tensor& x, const FilterBank& fb, Boundary boundary, Tensor& lo, Tensor& hi) {
  const std::size_t n = x.dim(0), m = x.dim(1);
  const std::size_t len = fb.length();
  const std::size_t k_out = band_length(n, len, boundary);
  lo = Tensor({k_out, m});
  hi = Tensor({k_out, m});
  const auto& kern = simd::kernels();
  for (std::size_t k = 0; k < k_out; ++k) {
    double* lo_row = lo.data() + k * m;
    double* hi_row = hi.data() + k * m;
    for (std::size_t j = 0; j < len; ++j) {
      const long idx = static_cast<long>(2 * k + 1) - static_cast<long>(j);
      const std::size_t src = boundary == Boundary::kPeriodic ? wrap(idx, static_cast<long>(n))
                                                              : reflect(idx, static_cast<long>(n));
      const double* row = x.data() + src * m;
      kern.axpy(fb.dec_lo[j], row, lo_row, m);
      kern.axpy(fb.dec_hi[j], row, hi_row, m);
    }
  }
}

Tensor synthesize_axis0(const Tensor& lo, const Tensor& hi, const FilterBank& fb, Boundary boundary,
                        std::size_t n) {
  require(lo.dims() == hi.dims(), "synthesize: lo/hi band shape mismatch");
  const std::size_t k_in = lo.dim(0), m = lo.dim(1);
  const std::size_t len = fb.length();
  require(band_length(n, len, boundary) == k_in,
          "synthesize: band length " + std::to_string(k_in) + " inconsistent with output length " +
              std::to_string(n));
  Tensor out({n, m});
  const auto& kern = simd::kernels();
  // Adjoint of the analysis operator; for symmetric boundary only in-range taps contribute.
  for (std::size_t k = 0; k < k_in; ++k) {
    const double* lo_row = lo.data() + k * m;
    const double* hi_row = hi.data() + k * m;
    for (std::size_t j = 0; j < len; ++j) {
      const long idx = static_cast<long>(2 * k + 1) - static_cast<long>(j);
      std::size_t dst;
      if (boundary == Boundary::kPeriodic) {
        dst = wrap(idx, static_cast<long>(n));
      } else {
        if (idx < 0 || idx >= static_cast<long>(n)) continue;
        dst = static_cast<std::size_t>(idx);
      }
      double* out_row = out.data() + dst * m;
      kern.axpy(fb.dec_lo[j], lo_row, out_row, m);
      kern.axpy(fb.dec_hi[j], hi_row, out_row, m);
    }
  }
  return out;
}

WaveletPyramid dwt2(const Tensor& image, const WaveletSpec& spec) {
  require(image.rank() == 2, "dwt2: expected a 2-D array, got " + dims_to_string(image.dims()));
  require(spec.levels >= 1, "dwt2: levels must be >= 1");
  const FilterBank& fb = filter_bank(spec.family);
  WaveletPyramid pyr;
  pyr.spec = spec;
  Tensor current = image;
  for (std::size_t level = 1; level <= spec.levels; ++level) {
    const std::size_t rows = current.dim(0), cols = current.dim(1);
    check_level_input(rows, cols, spec, level);
    pyr.extents.push_back({rows, cols});

    // Detector axis (axis 1) first, via the transpose.
    Tensor lo_t, hi_t;
    analyze_axis0(transpose2(current), fb, spec.boundary, lo_t, hi_t);
    const Tensor row_lo = transpose2(lo_t);
    const Tensor row_hi = transpose2(hi_t);

    DetailBands bands;
    Tensor approx;
    analyze_axis0(row_lo, fb, spec.boundary, approx, bands.h);
    analyze_axis0(row_hi, fb, spec.boundary, bands.v, bands.d);
    pyr.details.push_back(std::move(bands));
    current = std::move(approx);
  }
  pyr.approx = std::move(current);
  return pyr;
}

Tensor idwt2(const WaveletPyramid& pyr) {
  const FilterBank& fb = filter_bank(pyr.spec.family);
  require(pyr.details.size() == pyr.spec.levels && pyr.extents.size() == pyr.spec.levels,
          "idwt2: pyramid level count does not match its spec");
  Tensor current = pyr.approx;
  for (std::size_t level = pyr.spec.levels; level >= 1; --level) {
    const auto& bands = pyr.details[level - 1];
    const auto [rows, cols] = pyr.extents[level - 1];
    if (current.dims() != bands.v.dims() || current.dims() != bands.h.dims() ||
        current.dims() != bands.d.dims()) {
      throw_invalid("idwt2: band shape mismatch at level " + std::to_string(level) + ": approx " +
                    dims_to_string(current.dims()) + ", V " + dims_to_string(bands.v.dims()));
    }
    const Tensor row_lo = synthesize_axis0(current, bands.h, fb, pyr.spec.boundary, rows);
    const Tensor row_hi = synthesize_axis0(bands.v, bands.d, fb, pyr.spec.boundary, rows);
    current = transpose2(
        synthesize_axis0(transpose2(row_lo), transpose2(row_hi), fb, pyr.spec.boundary, cols));
  }
  return current;
}

Tensor reconstruct_band_subset(const WaveletPyramid& pyr, const std::vector<BandSelector>& keep) {
  require(!keep.empty(), "reconstruct_band_subset: keep set is empty");
  auto kept = [&](Band band, std::size_t level) {
    return std::any_of(keep.begin(), keep.end(), [&](const BandSelector& s) {
      return s.band == band && (band == Band::kApprox || s.level == 0 || s.level == level);
    });
  };
  WaveletPyramid sub = pyr;
  if (!kept(Band::kApprox, 0)) sub.approx.fill(0.0);
  for (std::size_t level = 1; level <= sub.details.size(); ++level) {
    auto& b = sub.details[level - 1];
    if (!kept(Band::kV, level)) b.v.fill(0.0);
    if (!kept(Band::kH, level)) b.h.fill(0.0);
    if (!kept(Band::kD, level)) b.d.fill(0.0);
  }
  return idwt2(sub);
}

}  // namespace ringkit
