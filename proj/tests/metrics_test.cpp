#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "ringkit/error.hpp"
#include "ringkit/metrics.hpp"
#include "ringkit/rng.hpp"

using namespace ringkit;

namespace {

Tensor random_tensor(Dims dims, std::uint64_t seed, double sd = 1.0) {
  Rng rng(seed);
  Tensor t(std::move(dims));
  for (double& v : t.storage()) v = rng_normal(rng, 0.0, sd);
  return t;
}

Tensor smooth_image(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) t(r, c) = 0.5 + 0.3 * std::sin(0.2 * r) * std::cos(0.13 * c);
  }
  return t;
}

// Direct SSIM for one window position, independent of the separable implementation.
double ssim_window(const Tensor& x, const Tensor& y, std::size_t r0, std::size_t c0, double range) {
  double w[11][11], total = 0;
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) {
      w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 2.25));
      total += w[i][j];
    }
  }
  double mx = 0, my = 0;
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) {
      mx += w[i][j] / total * x(r0 + i, c0 + j);
      my += w[i][j] / total * y(r0 + i, c0 + j);
    }
  }
  double vx = 0, vy = 0, cxy = 0;
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) {
      const double dx = x(r0 + i, c0 + j) - mx, dy = y(r0 + i, c0 + j) - my;
      vx += w[i][j] / total * dx * dx;
      vy += w[i][j] / total * dy * dy;
      cxy += w[i][j] / total * dx * dy;
    }
  }
  const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);
  return (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

}  // namespace

TEST_CASE("PSNR") {
  const auto ref = smooth_image(64);
  CHECK(psnr(ref, ref, 1.0) == kPsnrCapDb);
  Tensor off = ref;
  for (double& v : off.storage()) v += 0.1;
  CHECK(psnr(off, ref, 1.0) == doctest::Approx(20.0));
  CHECK_THROWS_AS(psnr(Tensor({3, 3}), Tensor({3, 4}), 1.0), Error);
  CHECK_THROWS_AS(psnr(ref, ref, 0.0), Error);

  const Tensor big({1000, 1000}, 0.0);
  const auto noise = random_tensor({1000, 1000}, 3, 0.01);
  CHECK(psnr(noise, big, 1.0) == doctest::Approx(40.0).epsilon(0.1 / 40.0));
}

TEST_CASE("SSIM") {
  const auto ref = smooth_image(48);
  CHECK(ssim(ref, ref, 1.0) == 1.0);

  double prev = 1.0;
  for (double c : {0.02, 0.05, 0.1, 0.2}) {
    Tensor shifted = ref;
    for (double& v : shifted.storage()) v += c;
    const double s = ssim(shifted, ref, 1.0);
    CHECK(s < prev);
    prev = s;
  }

  // Zero-mean random texture whose local means vanish, so the structure term dominates.
  Tensor z({32, 32});
  Rng rng(9);
  for (std::size_t r = 0; r < 32; ++r) {
    for (std::size_t c = 0; c < 32; ++c) z(r, c) = ((r + c) % 2 == 0 ? 1.0 : -1.0) * (1.0 + 0.5 * rng.uniform());
  }
  CHECK(ssim(-1.0 * z, z, data_range_of(z)) < 0.0);

  const auto noisy = ref + random_tensor({48, 48}, 5, 0.05);
  double expect = 0;
  for (std::size_t r = 0; r + 11 <= 48; ++r) {
    for (std::size_t c = 0; c + 11 <= 48; ++c) expect += ssim_window(noisy, ref, r, c, 1.0);
  }
  expect /= 38.0 * 38.0;
  CHECK(ssim(noisy, ref, 1.0) == doctest::Approx(expect).epsilon(1e-10));
  CHECK_THROWS_AS(ssim(Tensor({10, 20}), Tensor({10, 20}), 1.0), Error);
}

TEST_CASE("RMSE and HU") {
  const auto ref = smooth_image(16);
  CHECK(rmse(ref, ref) == 0.0);
  Tensor off = ref;
  for (double& v : off.storage()) v += 0.001;
  CHECK(rmse_hu(off, ref, 0.02) == doctest::Approx(50.0));
  const auto x = random_tensor({16, 16}, 1);
  CHECK(rmse(-3.0 * x, -3.0 * ref) == doctest::Approx(3.0 * rmse(x, ref)));
  CHECK(rmse(x, ref) == rmse(ref, x));
  CHECK_THROWS_AS(rmse_hu(x, ref, 0.0), Error);

  const auto report = evaluate(off, ref, 0.0, 0.02);
  CHECK(report.data_range == doctest::Approx(data_range_of(ref)));
  REQUIRE(report.rmse_hu.has_value());
  nlohmann::json j = report;
  CHECK(j["rmse_hu"].get<double>() == doctest::Approx(50.0));
  CHECK(to_csv_row("a", report).rfind("a,", 0) == 0);
}

TEST_CASE("coupling profile") {
  CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
  CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));

  const auto g = FanBeamGeometry::desk_scale();
  EllipsePhantom phantom{{Ellipse{5.0, 2.0, 14.0, 9.0, 0.5, 0.02}}};
  const auto clean = project_analytic(phantom, g);
  const WaveletSpec spec{WaveletFamily::kDb25, 1, Boundary::kSymmetric};

  SUBCASE("series layout and decomposition consistency") {
    const auto p = coupling_profile(clean, spec, 128);
    CHECK(p.p_measured.size() == g.n_angles);
    CHECK(p.p_global.size() == g.n_angles);
    CHECK(p.p_local.size() == g.n_angles);
    const auto pyr = dwt2(clean.data, spec);
    const auto rest = reconstruct_band_subset(pyr, {{Band::kH}, {Band::kD}});
    for (std::size_t a = 0; a < g.n_angles; ++a) {
      CHECK(std::abs(p.p_global[a] + p.p_local[a] + rest(a, 128) - p.p_measured[a]) < 1e-9);
    }
    const auto csv = to_csv(p);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(g.n_angles + 1));
  }
  SUBCASE("clean projections carry almost no local component") {
    const auto p = coupling_profile(clean, spec, 128);
    double lmax = 0, gmax = 0;
    for (std::size_t a = 0; a < g.n_angles; ++a) {
      lmax = std::max(lmax, std::abs(p.p_local[a]));
      gmax = std::max(gmax, p.p_global[a]);
    }
    CHECK(lmax < 0.01 * gmax);
  }
  SUBCASE("gain errors couple, offsets do not") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      Rng rg(seed), ro(seed + 100);
      const auto gain = apply_error_model(clean, sample_error_model(g.n_det, 0.02, 0, 0, rg));
      const auto offset = apply_error_model(clean, sample_error_model(g.n_det, 0, 0.002, 0, ro));
      for (std::size_t row : {110u, 128u, 140u}) {
        CAPTURE(seed);
        CAPTURE(row);
        CHECK(coupling_profile(gain, spec, row).pearson_r > 0.5);
        CHECK(std::abs(coupling_profile(offset, spec, row).pearson_r) < 0.2);
      }
    }
  }
  SUBCASE("row out of range") { CHECK_THROWS_AS(coupling_profile(clean, spec, 256), Error); }
}
