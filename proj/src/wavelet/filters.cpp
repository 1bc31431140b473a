#include <cmath>

#include "ringkit/error.hpp"
#include "ringkit/wavelet.hpp"

namespace ringkit {
namespace {

constexpr double kHaar[] = {0.70710678118654752440, 0.70710678118654752440};

constexpr double kDb2[] = {
    4.82962913144534156e-01, 8.36516303737807942e-01,
    2.24143868042013389e-01, -1.29409522551260370e-01,
};

// Minimum-phase Daubechies scaling filter with 25 vanishing moments.
constexpr double kDb25[] = {
    1.34802979347018901e-04, 2.25695959185477938e-03,
    1.71867412540401554e-02, 7.80358628721326691e-02,
    2.31693507886021832e-01, 4.59683415146094621e-01,
    5.81636896746057785e-01, 3.67885074802946688e-01,
    -9.71746409646381398e-02, -3.36473079641746109e-01,
    -8.75876145876546552e-02, 2.24537819745101702e-01,
    1.18155286719959854e-01, -1.50560213750579625e-01,
    -9.85086152899602163e-02, 1.06633805018477953e-01,
    6.67521644940186065e-02, -7.70841110565742005e-02,
    -3.71739628611225115e-02, 5.36179093987795008e-02,
    1.55426059291022909e-02, -3.40423204606533428e-02,
    -3.07983679484703657e-03, 1.89228044766276277e-02,
    -1.98942578220273657e-03, -8.86070261804636911e-03,
    2.72693625873849559e-03, 3.32270777397319179e-03,
    -1.84248429020333134e-03, -8.99977423746295044e-04,
    8.77258193674827487e-04, 1.15321244046630048e-04,
    -3.09880099098469781e-04, 3.54371452327605912e-05,
    7.90464000396552799e-05, -2.73304811996004172e-05,
    -1.27719529319978373e-05, 8.99066139306258831e-06,
    5.23282770815307647e-07, -1.77920133265363458e-06,
    3.21203751886251888e-07, 1.92280679014237168e-07,
    -8.65694173227850686e-08, -2.61159855611177069e-09,
    9.27922448008137207e-09, -1.88041575506215540e-09,
    -2.22847491022816889e-10, 1.53590157016265721e-10,
    -2.52762516346564475e-11, 1.50969208282391083e-12,
};

FilterBank make_bank(std::span<const double> h) {
  const std::size_t len = h.size();
  FilterBank fb;
  fb.rec_lo.assign(h.begin(), h.end());
  fb.dec_lo.resize(len);
  fb.rec_hi.resize(len);
  fb.dec_hi.resize(len);
  for (std::size_t n = 0; n < len; ++n) {
    fb.dec_lo[n] = h[len - 1 - n];
    fb.rec_hi[n] = (n % 2 == 0 ? 1.0 : -1.0) * h[len - 1 - n];
  }
  for (std::size_t n = 0; n < len; ++n) fb.dec_hi[n] = fb.rec_hi[len - 1 - n];

  // Reject a table that is not an orthonormal scaling filter.
  double total = 0.0;
  for (double c : h) total += c;
  if (std::abs(total - std::sqrt(2.0)) > 1e-12) throw_numeric("wavelet table: lowpass sum != sqrt(2)");
  for (std::size_t m = 0; 2 * m < len; ++m) {
    double acc = 0.0;
    for (std::size_t k = 0; k + 2 * m < len; ++k) acc += h[k] * h[k + 2 * m];
    if (std::abs(acc - (m == 0 ? 1.0 : 0.0)) > 1e-10) {
      throw_numeric("wavelet table: double-shift orthogonality fails at shift " + std::to_string(m));
    }
  }
  return fb;
}

}  // namespace

std::string to_string(WaveletFamily f) {
  switch (f) {
    case WaveletFamily::kHaar: return "haar";
    case WaveletFamily::kDb2: return "db2";
    case WaveletFamily::kDb25: return "db25";
  }
  return "haar";
}

std::string to_string(Boundary b) { return b == Boundary::kPeriodic ? "periodic" : "symmetric"; }

WaveletFamily parse_wavelet_family(const std::string& name) {
  if (name == "haar") return WaveletFamily::kHaar;
  if (name == "db2") return WaveletFamily::kDb2;
  if (name == "db25") return WaveletFamily::kDb25;
  throw_invalid("unknown wavelet family '" + name + "' (valid: haar, db2, db25)");
}

Boundary parse_boundary(const std::string& name) {
  if (name == "periodic") return Boundary::kPeriodic;
  if (name == "symmetric") return Boundary::kSymmetric;
  throw_invalid("unknown wavelet boundary '" + name + "' (valid: periodic, symmetric)");
}

std::span<const double> scaling_coefficients(WaveletFamily family) {
  switch (family) {
    case WaveletFamily::kHaar: return kHaar;
    case WaveletFamily::kDb2: return kDb2;
    case WaveletFamily::kDb25: return kDb25;
  }
  return kHaar;
}

const FilterBank& filter_bank(WaveletFamily family) {
  static const FilterBank haar = make_bank(kHaar);
  static const FilterBank db2 = make_bank(kDb2);
  static const FilterBank db25 = make_bank(kDb25);
  switch (family) {
    case WaveletFamily::kHaar: return haar;
    case WaveletFamily::kDb2: return db2;
    case WaveletFamily::kDb25: return db25;
  }
  return haar;
}

}  // namespace ringkit
