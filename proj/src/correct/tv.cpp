#include <algorithm>
#include <cmath>
#include <limits>

#include "ringkit/correct.hpp"
#include "ringkit/error.hpp"
#include "ringkit/parallel.hpp"

namespace ringkit {

double tv_l1_objective(const std::vector<double>& u, const std::vector<double>& s, double lambda) {
  double obj = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) obj += std::abs(u[i] - s[i]);
  for (std::size_t i = 0; i + 1 < u.size(); ++i) obj += lambda * std::abs(u[i + 1] - u[i]);
  return obj;
}

TvResult tv_l1_1d_trace(const std::vector<double>& s_in, double lambda, std::size_t iters) {
  require(lambda >= 0.0, "tv_l1_1d: lambda must be >= 0");
  TvResult result;
  const std::size_t n = s_in.size();
  if (n < 2 || lambda == 0.0) {
    result.u = s_in;
    result.objective_trace.push_back(tv_l1_objective(s_in, s_in, lambda));
    return result;
  }
  // The minimizer is scale-equivariant, so iterate on a copy whose mean absolute first
  // difference is 1; fixed steps then move at a rate independent of the signal's units.
  double scale = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) scale += std::abs(s_in[i + 1] - s_in[i]);
  scale /= static_cast<double>(n - 1);
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = s_in[i] / scale;

  const double step = 0.5 / std::sqrt(2.0);
  std::vector<double> u = s, ubar = s, p(n - 1, 0.0), next(n);
  std::vector<double> best = u;
  double best_obj = tv_l1_objective(u, s, lambda);

  for (std::size_t it = 1; it <= iters; ++it) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      p[i] = std::clamp(p[i] + step * (ubar[i + 1] - ubar[i]), -lambda, lambda);
    }
    for (std::size_t i = 0; i < n; ++i) {
      // (D^T p)_i = p[i-1] - p[i]
      const double dtp = (i > 0 ? p[i - 1] : 0.0) - (i + 1 < n ? p[i] : 0.0);
      const double r = u[i] - step * dtp - s[i];
      const double shrunk = r > step ? r - step : (r < -step ? r + step : 0.0);
      next[i] = s[i] + shrunk;
    }
    for (std::size_t i = 0; i < n; ++i) {
      ubar[i] = 2.0 * next[i] - u[i];
      u[i] = next[i];
    }
    if (it % 10 == 0 || it == iters) {
      const double obj = tv_l1_objective(u, s, lambda);
      if (obj < best_obj) {
        best_obj = obj;
        best = u;
      }
      result.objective_trace.push_back(best_obj * scale);
    }
  }
  for (double& v : best) v *= scale;
  result.u = std::move(best);
  return result;
}

std::vector<double> tv_l1_1d(const std::vector<double>& signal, double lambda, std::size_t iters) {
  return tv_l1_1d_trace(signal, lambda, iters).u;
}

void MpTvgConfig::validate() const {
  if (!(relax >= 0.0 && relax <= 1.0)) throw_invalid("mp_tvg: relax must lie in [0, 1]");
  if (!(gauss_sigma >= 0.0)) throw_invalid("mp_tvg: gauss_sigma must be >= 0");
  if (!(tv_lambda >= 0.0)) throw_invalid("mp_tvg: tv_lambda must be >= 0");
}

Tensor mp_tvg_columns(const Tensor& data, const MpTvgConfig& cfg) {
  cfg.validate();
  require(data.rank() == 2, "mp_tvg: expected a 2-D array");
  const std::size_t rows = data.dim(0), cols = data.dim(1);
  if (rows < 2) throw_invalid("mp_tvg: need at least 2 angles");
  Tensor out = data;
  std::vector<double> mean(cols);
  for (std::size_t it = 0; it < cfg.outer_iters; ++it) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) mean[c] += out(r, c);
    }
    for (double& m : mean) m /= static_cast<double>(rows);
    const auto fit = tv_l1_1d(mean, cfg.tv_lambda, cfg.tv_iters);
    std::vector<double> resid(cols);
    for (std::size_t c = 0; c < cols; ++c) resid[c] = mean[c] - fit[c];
    const auto e = gaussian_smooth(resid, cfg.gauss_sigma);
    parallel_for(rows, [&](std::size_t begin, std::size_t end) {
      for (std::size_t r = begin; r < end; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out(r, c) -= cfg.relax * e[c];
      }
    });
  }
  out.check_finite("mp_tvg output");
  return out;
}

Sinogram mp_tvg(const Sinogram& sino, const MpTvgConfig& cfg) {
  return Sinogram(sino.geometry, mp_tvg_columns(sino.data, cfg));
}

}  // namespace ringkit
