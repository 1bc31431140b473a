#include <algorithm>
#include <cmath>
#include <sstream>

#include "ringkit/error.hpp"
#include "ringkit/metrics.hpp"

namespace ringkit {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), "pearson: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

CouplingProfile coupling_profile(const Sinogram& sino, const WaveletSpec& spec, std::size_t row) {
  if (row >= sino.n_det()) {
    throw_invalid("coupling_profile: detector index " + std::to_string(row) + " out of range [0, " +
                  std::to_string(sino.n_det()) + ")");
  }
  const auto pyr = dwt2(sino.data, spec);
  const Tensor global = reconstruct_band_subset(pyr, {{Band::kApprox}});
  const Tensor local = reconstruct_band_subset(pyr, {{Band::kV}});

  CouplingProfile p;
  p.row = row;
  const std::size_t n = sino.n_angles();
  p.p_measured.resize(n);
  p.p_global.resize(n);
  p.p_local.resize(n);
  for (std::size_t a = 0; a < n; ++a) {
    p.p_measured[a] = sino(a, row);
    p.p_global[a] = global(a, row);
    p.p_local[a] = local(a, row);
  }
  std::vector<double> mag(n);
  for (std::size_t a = 0; a < n; ++a) mag[a] = std::abs(p.p_local[a]);
  p.pearson_r_full = pearson(mag, p.p_global);

  const double peak = *std::max_element(p.p_global.begin(), p.p_global.end());
  std::vector<double> m_sel, g_sel;
  for (std::size_t a = 0; a < n; ++a) {
    if (peak > 0.0 && p.p_global[a] > 0.05 * peak) {
      m_sel.push_back(mag[a]);
      g_sel.push_back(p.p_global[a]);
    }
  }
  p.support = m_sel.size();
  p.pearson_r = pearson(m_sel, g_sel);
  return p;
}

std::string to_csv(const CouplingProfile& p) {
  std::ostringstream os;
  os.precision(12);
  os << "angle_index,p_measured,p_global,p_local\n";
  for (std::size_t a = 0; a < p.p_measured.size(); ++a) {
    os << a << ',' << p.p_measured[a] << ',' << p.p_global[a] << ',' << p.p_local[a] << '\n';
  }
  return os.str();
}

}  // namespace ringkit
