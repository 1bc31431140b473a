#include <cmath>

#include "doctest.h"
#include "ringkit/error.hpp"
#include "ringkit/parallel.hpp"
#include "ringkit/simulate.hpp"

using namespace ringkit;

namespace {

FanBeamGeometry small_geometry(std::size_t n_det, std::size_t n_angles) {
  FanBeamGeometry g = FanBeamGeometry::desk_scale();
  g.n_det = n_det;
  g.n_angles = n_angles;
  return g;
}

double column_std(const Sinogram& s, std::size_t i) {
  double m = 0, m2 = 0;
  for (std::size_t a = 0; a < s.n_angles(); ++a) {
    m += s(a, i);
    m2 += s(a, i) * s(a, i);
  }
  m /= s.n_angles();
  return std::sqrt(m2 / s.n_angles() - m * m);
}

}  // namespace

TEST_CASE("geometry defaults and validation") {
  const auto full = FanBeamGeometry::full_scale();
  CHECK(full.sdd_mm == 425.0);
  CHECK(full.sod_mm == 300.0);
  CHECK(full.n_det == 2048);
  CHECK(full.det_spacing_mm == 0.075);
  CHECK(full.n_angles == 384);
  CHECK(full.detector_position(0) == doctest::Approx(-1023.5 * 0.075));
  FanBeamGeometry bad = full;
  bad.sod_mm = 500.0;
  CHECK_THROWS_AS(bad.validate(), Error);

  nlohmann::json j = full;
  CHECK(j.contains("det_spacing_mm"));
  CHECK(j.get<FanBeamGeometry>().n_det == 2048);
}

TEST_CASE("analytic projector oracles") {
  SUBCASE("empty phantom") {
    const auto s = project_analytic(EllipsePhantom{}, small_geometry(64, 16));
    CHECK(max_abs(s.data) == 0.0);
  }
  SUBCASE("central ray through a centered disc is its diameter") {
    const auto g = small_geometry(257, 12);
    const auto s = project_analytic(EllipsePhantom::centered_disc(15.0, 0.02), g);
    for (std::size_t a = 0; a < g.n_angles; ++a) CHECK(s(a, 128) == doctest::Approx(2 * 15.0 * 0.02).epsilon(1e-12));
  }
  SUBCASE("rotational symmetry gives identical rows") {
    const auto g = small_geometry(128, 36);
    const auto s = project_analytic(EllipsePhantom::centered_disc(18.0, 0.02), g);
    double dev = 0.0;
    for (std::size_t a = 1; a < g.n_angles; ++a) {
      for (std::size_t i = 0; i < g.n_det; ++i) dev = std::max(dev, std::abs(s(a, i) - s(0, i)));
    }
    CHECK(dev < 1e-12);
  }
  SUBCASE("phantom outside the field of view") {
    EllipsePhantom p{{Ellipse{250.0, 0.0, 60.0, 10.0, 0.0, 0.01}}};
    CHECK_THROWS_WITH_AS(project_analytic(p, small_geometry(64, 4)),
                         doctest::Contains("ellipse 0"), Error);
  }
}

TEST_CASE("discrete projector") {
  SUBCASE("zero image") {
    Image2D img(32, 32, 0.5);
    CHECK(max_abs(project_discrete(img, small_geometry(64, 8)).data) == 0.0);
  }
  SUBCASE("non-square image is rejected") {
    Image2D img(32, 16, 0.5);
    CHECK_THROWS_AS(project_discrete(img, small_geometry(64, 8)), Error);
  }
  SUBCASE("linearity") {
    const auto g = small_geometry(96, 20);
    Rng rng(5);
    Image2D i1(48, 48, 0.8), i2(48, 48, 0.8), mix(48, 48, 0.8);
    for (std::size_t k = 0; k < i1.pixels.size(); ++k) {
      i1.pixels[k] = rng.uniform();
      i2.pixels[k] = rng.uniform();
      mix.pixels[k] = 2.5 * i1.pixels[k] - 0.75 * i2.pixels[k];
    }
    const auto p1 = project_discrete(i1, g), p2 = project_discrete(i2, g), pm = project_discrete(mix, g);
    double err = 0.0;
    for (std::size_t k = 0; k < pm.data.size(); ++k) {
      err = std::max(err, std::abs(pm.data[k] - (2.5 * p1.data[k] - 0.75 * p2.data[k])));
    }
    CHECK(err < 1e-12);
  }
  SUBCASE("rasterized disc matches the analytic projection") {
    auto g = small_geometry(256, 180);
    const auto phantom = EllipsePhantom::centered_disc(20.0, 0.02);
    const auto img = phantom.rasterize(256, 2.0 * g.fov_radius_mm() / 256.0);
    const auto disc = project_discrete(img, g);
    const auto exact = project_analytic(phantom, g);
    CHECK(relative_l2(disc.data, exact.data) <= 0.02);
  }
}

TEST_CASE("Poisson transmission noise") {
  const auto g = small_geometry(100, 100);
  SUBCASE("zero projection: std follows 1/sqrt(i0)") {
    Rng rng(11);
    const auto noisy = add_poisson_noise(Sinogram(g), 1e6, rng);
    double m = 0, m2 = 0;
    for (double v : noisy.data.values()) {
      m += v;
      m2 += v * v;
    }
    m /= noisy.data.size();
    const double sd = std::sqrt(m2 / noisy.data.size() - m * m);
    CHECK(std::abs(m) < 5e-5);
    CHECK(sd == doctest::Approx(1e-3).epsilon(0.05));
  }
  SUBCASE("attenuated rays are noisier by sqrt(exp(dp))") {
    Sinogram lo(g), hi(g);
    lo.data.fill(1.0);
    hi.data.fill(10.0);
    Rng r1(12), r2(13);
    const auto nlo = add_poisson_noise(lo, 1e6, r1), nhi = add_poisson_noise(hi, 1e6, r2);
    double slo = 0, shi = 0;
    for (std::size_t i = 0; i < g.n_det; ++i) {
      slo += column_std(nlo, i);
      shi += column_std(nhi, i);
    }
    CHECK(shi / slo == doctest::Approx(std::sqrt(std::exp(9.0))).epsilon(0.1));
  }
  SUBCASE("zero counts clamp to one") {
    Sinogram s(small_geometry(8, 4));
    s.data.fill(40.0);
    Rng rng(1);
    const auto noisy = add_poisson_noise(s, 1e6, rng);
    for (double v : noisy.data.values()) CHECK(v == doctest::Approx(std::log(1e6)));
  }
  SUBCASE("negative projection rejected") {
    Sinogram s(small_geometry(8, 4));
    s.data[3] = -0.1;
    Rng rng(1);
    CHECK_THROWS_AS(add_poisson_noise(s, 1e6, rng), Error);
  }
  SUBCASE("seeded noise is reproducible for any thread count") {
    const auto clean = project_analytic(EllipsePhantom::head(20.0), small_geometry(64, 30));
    set_thread_count(1);
    Rng a(99);
    const auto n1 = add_poisson_noise(clean, 1e6, a);
    set_thread_count(3);
    Rng b(99);
    const auto n2 = add_poisson_noise(clean, 1e6, b);
    set_thread_count(0);
    CHECK(bit_identical(n1.data, n2.data));
  }
}

TEST_CASE("detector error model") {
  Rng rng(2);
  SUBCASE("zero sigmas give the identity model") {
    const auto m = sample_error_model(16, 0, 0, 0, rng);
    for (std::size_t i = 0; i < 16; ++i) {
      CHECK(m.gain[i] == 1.0);
      CHECK(m.offset[i] == 0.0);
      CHECK(m.quad[i] == 0.0);
    }
  }
  SUBCASE("gain spread") {
    const auto m = sample_error_model(2048, 0.02, 0, 0, rng);
    double s = 0, s2 = 0;
    for (double g : m.gain) {
      s += g;
      s2 += g * g;
    }
    const double sd = std::sqrt(s2 / 2048 - (s / 2048) * (s / 2048));
    CHECK(sd >= 0.015);
    CHECK(sd <= 0.025);
  }
  SUBCASE("truncation keeps gains in [0.5, 1.5]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng r(seed);
      const auto m = sample_error_model(512, 0.6, 0, 0, r);
      for (double g : m.gain) {
        CHECK(g >= 0.5);
        CHECK(g <= 1.5);
      }
    }
  }
  SUBCASE("application") {
    const auto g = small_geometry(4, 3);
    Sinogram s(g);
    s.data.fill(2.0);
    CHECK(bit_identical(apply_error_model(s, DetectorErrorModel::identity(4)).data, s.data));
    auto m = DetectorErrorModel::identity(4);
    m.gain[1] = 1.01;
    CHECK(apply_error_model(s, m)(0, 1) == doctest::Approx(2.02));
    CHECK_THROWS_AS(apply_error_model(s, DetectorErrorModel::identity(5)), Error);
  }
  SUBCASE("affine per column, additive special case") {
    const auto geom = small_geometry(64, 20);
    const auto clean = project_analytic(EllipsePhantom::head(20.0), geom);
    const auto m = sample_error_model(64, 0.02, 0.002, 0, rng);
    const auto bad = apply_error_model(clean, m);
    for (std::size_t i = 0; i < 64; ++i) {
      for (std::size_t a = 1; a < 20; ++a) {
        CHECK(bad(a, i) - bad(0, i) ==
              doctest::Approx(m.gain[i] * (clean(a, i) - clean(0, i))).epsilon(1e-12).scale(1e-12));
      }
    }
    auto additive = m;
    std::fill(additive.gain.begin(), additive.gain.end(), 1.0);
    const auto shifted = apply_error_model(clean, additive);
    for (std::size_t i = 0; i < 64; ++i) {
      for (std::size_t a = 0; a < 20; ++a) {
        CHECK(shifted(a, i) - clean(a, i) == doctest::Approx(additive.offset[i]).epsilon(1e-9).scale(1e-12));
      }
    }
  }
  SUBCASE("gain stripes are stronger where rays cross the object") {
    const auto geom = small_geometry(128, 16);
    const auto clean = project_analytic(EllipsePhantom::centered_disc(10.0, 0.02), geom);
    const auto m = sample_error_model(128, 0.02, 0, 0, rng);
    const auto bad = apply_error_model(clean, m);
    double inside = 0, outside = 0;
    std::size_t n_in = 0, n_out = 0;
    for (std::size_t i = 0; i < 128; ++i) {
      const double d = std::abs(bad(0, i) - clean(0, i));
      if (clean(0, i) > 0) {
        inside += d;
        ++n_in;
      } else {
        outside += d;
        ++n_out;
      }
    }
    REQUIRE(n_in > 0);
    REQUIRE(n_out > 0);
    CHECK(inside / n_in > outside / n_out);
  }
  SUBCASE("json round trip") {
    const auto m = sample_error_model(8, 0.02, 0.002, 0.001, rng);
    nlohmann::json j = m;
    const auto back = j.get<DetectorErrorModel>();
    CHECK(back.gain == m.gain);
    CHECK(back.quad == m.quad);
  }
}
