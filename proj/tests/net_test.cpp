#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "gradcheck.hpp"
#include "ringkit/error.hpp"
#include "ringkit/net/blocks.hpp"
#include "ringkit/net/pipeline.hpp"
#include "ringkit/net/train.hpp"
#include "ringkit/wavelet.hpp"

using namespace ringkit;
using namespace ringkit::net;
using ringkit::testing::gradcheck;
using ringkit::testing::probe;
using ringkit::testing::random_tensor;

namespace {

constexpr double kGradTol = 1e-4;
const Dims kSmall{2, 3, 5, 5};

Var rand_param(Dims dims, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return parameter(random_tensor(std::move(dims), seed, lo, hi));
}

testing::NamedVars named(const ParamStore& store) {
  testing::NamedVars out(store.entries().begin(), store.entries().end());
  return out;
}

void check_op(const std::string& name, const std::function<Var(const std::vector<Var>&)>& op,
              const std::vector<Dims>& input_dims) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<Var> in;
    testing::NamedVars nv;
    for (std::size_t i = 0; i < input_dims.size(); ++i) {
      in.push_back(rand_param(input_dims[i], seed * 31 + i));
      nv.emplace_back("in" + std::to_string(i), in.back());
    }
    const auto r = gradcheck([&] { return probe(op(in), seed); }, nv);
    INFO(name << " seed " << seed << " worst " << r.worst);
    CHECK(r.max_rel < kGradTol);
  }
}

double rel_diff(const Tensor& a, const Tensor& b) { return std::sqrt(sum_squares(a - b) / sum_squares(b)); }

}  // namespace

TEST_CASE("graph: shared subexpressions accumulate once per path") {
  const Var x = parameter(Tensor({1}, 3.0));
  const Var y = add(hadamard(x, x), x);  // dy/dx = 2x + 1
  backward(y);
  CHECK(x->grad[0] == doctest::Approx(7.0));
  CHECK(x->grad.dims() == x->value.dims());
  backward(y);  // a second pass restarts from zero
  CHECK(x->grad[0] == doctest::Approx(7.0));
}

TEST_CASE("graph: backward requires a scalar root") {
  const Var x = parameter(Tensor({2}, 1.0));
  CHECK_THROWS_AS(backward(x), Error);
}

TEST_CASE("gradcheck: a wrong backward rule is caught") {
  const Var x = parameter(random_tensor({1, 1, 4, 4}, 1));
  auto bad_square = [&] {
    Tensor y = x->value;
    for (double& v : y.storage()) v *= v;
    return make_node(std::move(y), {x}, "bad_square", [](Node& self) {
      Node& p = *self.parents[0];
      for (std::size_t i = 0; i < p.value.size(); ++i) p.grad_buffer()[i] += 3.0 * p.value[i] * self.grad[i];
    });
  };
  const auto r = gradcheck([&] { return probe(relu(bad_square()), 3); }, {{"x", x}});
  CHECK(r.max_rel > 0.1);
  CHECK(r.skipped == 0);
}

TEST_CASE("ops: elementwise gradients") {
  check_op("add", [](auto& v) { return add(v[0], v[1]); }, {kSmall, kSmall});
  check_op("add broadcast", [](auto& v) { return add(v[0], v[1]); }, {kSmall, {2, 3, 1, 1}});
  check_op("sub", [](auto& v) { return sub(v[0], v[1]); }, {kSmall, {1, 1, 5, 5}});
  check_op("hadamard", [](auto& v) { return hadamard(v[0], v[1]); }, {kSmall, kSmall});
  check_op("hadamard broadcast", [](auto& v) { return hadamard(v[0], v[1]); }, {kSmall, {2, 1, 5, 5}});
  check_op("scale", [](auto& v) { return scale(v[0], -2.5); }, {kSmall});
  check_op("relu", [](auto& v) { return relu(v[0]); }, {kSmall});
  check_op("sigmoid", [](auto& v) { return sigmoid(v[0]); }, {kSmall});
  check_op("tanh", [](auto& v) { return tanh(v[0]); }, {kSmall});
  check_op("softmax1", [](auto& v) { return softmax(v[0], 1); }, {kSmall});
  check_op("softmax3", [](auto& v) { return softmax(v[0], 3); }, {kSmall});
}

TEST_CASE("ops: reduction and loss gradients") {
  check_op("gap spatial", [](auto& v) { return global_avg_pool(v[0], PoolAxis::kSpatial); }, {kSmall});
  check_op("gap channel", [](auto& v) { return global_avg_pool(v[0], PoolAxis::kChannel); }, {kSmall});
  check_op("gmp spatial", [](auto& v) { return global_max_pool(v[0], PoolAxis::kSpatial); }, {kSmall});
  check_op("gmp channel", [](auto& v) { return global_max_pool(v[0], PoolAxis::kChannel); }, {kSmall});
  check_op("l1", [](auto& v) { return l1_loss(v[0], v[1]); }, {kSmall, kSmall});
  check_op("sum_all", [](auto& v) { return sum_all(v[0]); }, {kSmall});
}

TEST_CASE("ops: convolution and linear algebra gradients") {
  check_op("conv3x3", [](auto& v) { return conv2d(v[0], v[1], v[2]); }, {kSmall, {4, 3, 3, 3}, {4}});
  check_op("conv1x1", [](auto& v) { return conv2d(v[0], v[1], v[2]); }, {kSmall, {2, 3, 1, 1}, {2}});
  check_op("conv no bias", [](auto& v) { return conv2d(v[0], v[1], nullptr); }, {kSmall, {3, 3, 3, 3}});
  check_op("matmul", [](auto& v) { return matmul(v[0], v[1]); }, {{2, 3, 4, 5}, {2, 3, 5, 2}});
  check_op("matmul wide", [](auto& v) { return matmul(v[0], v[1]); }, {{1, 1, 3, 2}, {1, 1, 2, 9}});
  check_op("transpose", [](auto& v) { return transpose_last2(v[0]); }, {kSmall});
  check_op("reshape", [](auto& v) { return reshape(v[0], {2, 75, 1, 1}); }, {kSmall});
  check_op("concat", [](auto& v) { return concat_channels({v[0], v[1]}); }, {kSmall, {2, 2, 5, 5}});
  check_op("slice", [](auto& v) { return slice_channels(v[0], 1, 2); }, {kSmall});
  check_op("tokens", [](auto& v) { return from_tokens(to_tokens(v[0]), 5, 5); }, {kSmall});
  check_op("to_tokens", [](auto& v) { return to_tokens(v[0]); }, {kSmall});
}

TEST_CASE("ops: resampling, normalization and wavelet gradients") {
  check_op("adaptive pool", [](auto& v) { return adaptive_avg_pool(v[0], 3, 2); }, {kSmall});
  check_op("upsample", [](auto& v) { return upsample_nearest(v[0], 7, 9); }, {kSmall});
  check_op("layer norm", [](auto& v) { return layer_norm_channels(v[0], v[1], v[2]); }, {kSmall, {3}, {3}});
  check_op("haar dwt", [](auto& v) { return haar_dwt(v[0]); }, {{2, 3, 6, 4}});
  check_op("haar idwt", [](auto& v) { return haar_idwt(v[0]); }, {{2, 8, 3, 2}});
}

TEST_CASE("ops: state-space scan gradients") {
  for (std::size_t axis : {2, 3}) {
    for (bool rev : {false, true}) {
      check_op("ssm", [&](auto& v) { return ssm_scan(v[0], v[1], v[2], v[3], v[4], axis, rev); },
               {kSmall, {3}, {3}, {3}, {3}});
    }
  }
  check_op("ssm4", [](auto& v) { return ssm_scan4(v[0], v[1], v[2], v[3], v[4]); }, {kSmall, {3}, {3}, {3}, {3}});
}

TEST_CASE("ops: softmax normalizes along its axis") {
  const Var x = constant(random_tensor({3, 4, 6, 5}, 9, -20.0, 20.0));
  for (std::size_t axis = 0; axis < 4; ++axis) {
    const Tensor s = softmax(x, axis)->value;
    const Dims& d = s.dims();
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= d[i];
    for (std::size_t i = axis + 1; i < 4; ++i) inner *= d[i];
    double worst = 0.0;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        double total = 0.0;
        for (std::size_t k = 0; k < d[axis]; ++k) total += s[(o * d[axis] + k) * inner + in];
        worst = std::max(worst, std::abs(total - 1.0));
      }
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("ops: conv with a centered unit kernel is the identity") {
  const Var x = constant(random_tensor(kSmall, 4));
  Tensor w({3, 3, 3, 3});
  for (std::size_t c = 0; c < 3; ++c) w[((c * 3 + c) * 3 + 1) * 3 + 1] = 1.0;
  CHECK(max_abs_diff(conv2d(x, constant(w), nullptr)->value, x->value) == 0.0);
}

TEST_CASE("ops: conv matches a direct zero-padded sum") {
  const Tensor x = random_tensor({1, 2, 4, 5}, 1), w = random_tensor({1, 2, 3, 3}, 2);
  const Tensor y = conv2d(constant(x), constant(w), nullptr)->value;
  for (long r = 0; r < 4; ++r) {
    for (long c = 0; c < 5; ++c) {
      double acc = 0.0;
      for (std::size_t ci = 0; ci < 2; ++ci) {
        for (long dy = -1; dy <= 1; ++dy) {
          for (long dx = -1; dx <= 1; ++dx) {
            if (r + dy < 0 || r + dy >= 4 || c + dx < 0 || c + dx >= 5) continue;
            acc += w[(ci * 3 + (dy + 1)) * 3 + (dx + 1)] * x.at4(0, ci, r + dy, c + dx);
          }
        }
      }
      CHECK(y.at4(0, 0, r, c) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("ops: max pool routes gradient to the first maximum") {
  Tensor t({1, 1, 2, 2}, 1.0);
  const Var x = parameter(t);
  backward(sum_all(global_max_pool(x, PoolAxis::kSpatial)));
  CHECK(x->grad[0] == 1.0);
  CHECK(x->grad[1] == 0.0);
  CHECK(x->grad[3] == 0.0);
}

TEST_CASE("ops: l1 subgradient uses sign(0) = 0") {
  const Var p = parameter(Tensor({1, 1, 1, 3}, std::vector<double>{1.0, 2.0, 3.0}));
  const Var t = constant(Tensor({1, 1, 1, 3}, std::vector<double>{0.0, 2.0, 5.0}));
  const Var loss = l1_loss(p, t);
  CHECK(loss->value[0] == doctest::Approx(1.0));
  backward(loss);
  CHECK(p->grad[0] == doctest::Approx(1.0 / 3.0));
  CHECK(p->grad[1] == 0.0);
  CHECK(p->grad[2] == doctest::Approx(-1.0 / 3.0));
}

TEST_CASE("ops: dim errors name the op and the dims") {
  const Var a = constant(Tensor({1, 2, 3, 3})), b = constant(Tensor({1, 3, 3, 3}));
  auto message = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const std::string m1 = message([&] { add(a, b); });
  CHECK(m1.find("add") != std::string::npos);
  CHECK(m1.find("[1,2,3,3]") != std::string::npos);
  CHECK(message([&] { matmul(a, b); }).find("matmul") != std::string::npos);
  CHECK(message([&] { haar_dwt(constant(Tensor({1, 1, 3, 4}))); }).find("haar_dwt") != std::string::npos);
  CHECK(message([&] { conv2d(a, constant(Tensor({1, 3, 3, 3})), nullptr); }).find("conv2d") != std::string::npos);
  CHECK(message([&] { softmax(a, 4); }).find("softmax") != std::string::npos);
}

TEST_CASE("ops: haar analysis matches the separable wavelet transform") {
  const Tensor img = random_tensor({12, 16}, 5);
  const WaveletPyramid pyr = dwt2(img, {WaveletFamily::kHaar, 1, Boundary::kPeriodic});
  const Tensor bands = haar_dwt(constant(img.reshaped({1, 1, 12, 16})))->value;
  const Tensor* ref[4] = {&pyr.approx, &pyr.details[0].v, &pyr.details[0].h, &pyr.details[0].d};
  for (std::size_t band = 0; band < 4; ++band) {
    double worst = 0.0;
    for (std::size_t r = 0; r < 6; ++r) {
      for (std::size_t c = 0; c < 8; ++c) worst = std::max(worst, std::abs(bands.at4(0, band, r, c) - (*ref[band])(r, c)));
    }
    CHECK(worst < 1e-12);
  }
  // Detector-axis highpass of one row pair: (x[2k] - x[2k+1]) / sqrt(2) per row, then row lowpass.
  const double hi0 = (img(0, 0) - img(0, 1)) / std::sqrt(2.0), hi1 = (img(1, 0) - img(1, 1)) / std::sqrt(2.0);
  CHECK(bands.at4(0, 1, 0, 0) == doctest::Approx((hi0 + hi1) / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("ops: haar synthesis inverts analysis") {
  const Tensor x = random_tensor({2, 3, 8, 6}, 6);
  CHECK(max_abs_diff(haar_idwt(haar_dwt(constant(x)))->value, x) < 1e-14);
}

TEST_CASE("ops: adaptive pool and nearest upsample shapes") {
  const Tensor x = random_tensor({1, 1, 5, 7}, 3);
  const Tensor p = adaptive_avg_pool(constant(x), 2, 3)->value;
  // Row bin 0 covers rows [0, 3), column bin 1 covers [2, 5).
  double acc = 0.0;
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 2; c < 5; ++c) acc += x.at4(0, 0, r, c);
  }
  CHECK(p.at4(0, 0, 0, 1) == doctest::Approx(acc / 9.0));
  const Tensor u = upsample_nearest(constant(p), 5, 7)->value;
  CHECK(u.at4(0, 0, 4, 6) == p.at4(0, 0, 1, 2));
  CHECK(u.at4(0, 0, 2, 3) == p.at4(0, 0, 0, 1));
}

TEST_CASE("ssm: a = 0, c = 0, d = 1 is the identity") {
  const Var x = constant(random_tensor(kSmall, 8));
  const Var z = constant(Tensor({3})), one = constant(Tensor({3}, 1.0));
  CHECK(max_abs_diff(ssm_scan(x, z, one, z, one, 3, false)->value, x->value) == 0.0);
  CHECK(max_abs_diff(ssm_scan4(x, z, one, z, one)->value, x->value) < 1e-15);
}

TEST_CASE("ssm: impulse decays geometrically in the scan direction") {
  Tensor imp({1, 1, 1, 8});
  imp[0] = 1.0;
  const Var a = constant(Tensor({1}, std::atanh(0.5))), one = constant(Tensor({1}, 1.0)), zero = constant(Tensor({1}));
  const Tensor y = ssm_scan(constant(imp), a, one, one, zero, 3, false)->value;
  for (std::size_t t = 0; t < 8; ++t) CHECK(y[t] == doctest::Approx(std::pow(0.5, double(t))).epsilon(1e-14));
  const Tensor yr = ssm_scan(constant(imp), a, one, one, zero, 3, true)->value;
  CHECK(yr[0] == doctest::Approx(1.0));
  for (std::size_t t = 1; t < 8; ++t) CHECK(yr[t] == 0.0);
}

TEST_CASE("ssm: four-direction scan reaches the far corner") {
  Tensor imp({1, 1, 8, 8});
  imp[0] = 1.0;
  const Var a = constant(Tensor({1}, 0.5)), one = constant(Tensor({1}, 1.0)), zero = constant(Tensor({1}));
  const Tensor y = ssm_scan4(constant(imp), a, one, one, zero)->value;
  for (double v : y.storage()) CHECK(v > 0.0);
}

// ---------------------------------------------------------------------------------------------

TEST_CASE("auma: weights form a partition of unity") {
  for (std::size_t n : {2, 3, 4}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      ParamStore store(seed);
      Auma auma(store, "auma", 4, n);
      std::vector<Var> xs;
      for (std::size_t i = 0; i < n; ++i) xs.push_back(constant(random_tensor({2, 4, 6, 5}, seed * 10 + i, -5, 5)));
      const AumaResult r = auma.forward(xs);
      Tensor total(r.weights[0]->dims());
      for (const auto& w : r.weights) total = total + w->value;
      double worst = 0.0;
      for (double v : total.storage()) worst = std::max(worst, std::abs(v - 1.0));
      CHECK(worst < 1e-12);
    }
  }
}

TEST_CASE("auma: equal inputs pass through") {
  ParamStore store(3);
  Auma auma(store, "auma", 4, 2);
  const Var x = constant(random_tensor({1, 4, 6, 6}, 1));
  CHECK(max_abs_diff(auma.forward({x, x}).out->value, x->value) < 1e-15);
}

TEST_CASE("auma: zero branch convs average the inputs") {
  ParamStore store(4);
  Auma auma(store, "auma", 3, 3);
  for (const auto& [name, v] : store.entries()) {
    if (name.find("branch") != std::string::npos) v->value.fill(0.0);
  }
  const Var a = constant(random_tensor({1, 3, 4, 4}, 1)), b = constant(random_tensor({1, 3, 4, 4}, 2)),
            c = constant(random_tensor({1, 3, 4, 4}, 3));
  const AumaResult r = auma.forward({a, b, c});
  for (double w : r.weights[1]->value.storage()) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const Tensor mean = (1.0 / 3.0) * (a->value + b->value + c->value);
  CHECK(max_abs_diff(r.out->value, mean) < 1e-15);
}

TEST_CASE("auma: forced branch passes that input exactly") {
  ParamStore store(5);
  Auma auma(store, "auma", 4, 2, BlockInit::kIdentity, 1);
  const Var a = constant(random_tensor({1, 4, 5, 5}, 1)), b = constant(random_tensor({1, 4, 5, 5}, 2));
  const AumaResult r = auma.forward({a, b});
  CHECK(max_abs_diff(r.out->value, b->value) == 0.0);
  for (double w : r.weights[0]->value.storage()) CHECK(w == 0.0);
}

TEST_CASE("auma: gradient check over inputs and parameters") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ParamStore store(seed);
    Auma auma(store, "auma", 4, 3);
    auto nv = named(store);
    std::vector<Var> xs;
    for (int i = 0; i < 3; ++i) {
      xs.push_back(rand_param({2, 4, 4, 3}, seed * 7 + i));
      nv.emplace_back("x" + std::to_string(i), xs.back());
    }
    const auto r = gradcheck([&] { return probe(auma.forward(xs).out, seed); }, nv);
    INFO("worst " << r.worst);
    CHECK(r.max_rel < kGradTol);
  }
}

TEST_CASE("auma: input errors") {
  ParamStore store(1);
  Auma auma(store, "auma", 4, 2);
  const Var a = constant(Tensor({1, 4, 4, 4})), b = constant(Tensor({1, 4, 4, 5}));
  CHECK_THROWS_AS(auma.forward({a, b}), Error);
  CHECK_THROWS_AS(auma.forward({a}), Error);
  CHECK_THROWS_AS(Auma(store, "x", 4, 1), Error);
}

TEST_CASE("lfc: identity constructor and locality") {
  ParamStore store(2);
  Lfc ident(store, "lfc_id", 4, BlockInit::kIdentity);
  const Tensor x = random_tensor({1, 4, 15, 15}, 3);
  CHECK(max_abs_diff(ident.forward(constant(x))->value, x) == 0.0);

  Lfc lfc(store, "lfc", 4);
  const Tensor base = lfc.forward(constant(x))->value;
  Tensor bumped = x;
  bumped.at4(0, 2, 7, 7) += 1.0;
  const Tensor out = lfc.forward(constant(bumped))->value;
  long reach = -1;
  for (std::size_t c = 0; c < 4; ++c) {
    for (long r = 0; r < 15; ++r) {
      for (long col = 0; col < 15; ++col) {
        if (out.at4(0, c, r, col) != base.at4(0, c, r, col)) {
          reach = std::max(reach, std::max(std::abs(r - 7), std::abs(col - 7)));
        }
      }
    }
  }
  CHECK(reach <= 4);
  CHECK(reach >= 1);
}

TEST_CASE("lfc: gradient check") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ParamStore store(seed);
    Lfc lfc(store, "lfc", 4);
    auto nv = named(store);
    const Var x = rand_param({1, 4, 5, 5}, seed);
    nv.emplace_back("x", x);
    const auto r = gradcheck([&] { return probe(lfc.forward(x), seed); }, nv);
    INFO("worst " << r.worst);
    CHECK(r.max_rel < kGradTol);
  }
}

TEST_CASE("gfc: identity constructor") {
  ParamStore store(1);
  Gfc gfc(store, "gfc", 4, BlockInit::kIdentity);
  const Tensor x = random_tensor({2, 4, 8, 8}, 5);
  CHECK(rel_diff(gfc.forward(constant(x))->value, x) < 1e-6);
}

TEST_CASE("gfc: impulse response is global") {
  // Channel layer norm maps a one-channel signal to zero, so the check uses two channels.
  ParamStore store(2);
  Gfc gfc(store, "gfc", 2);
  Tensor x({1, 2, 8, 8});
  x.at4(0, 0, 0, 0) = 1.0;
  const Tensor base = gfc.forward(constant(Tensor({1, 2, 8, 8})))->value;
  const Tensor y = gfc.forward(constant(x))->value;
  CHECK(std::abs(y.at4(0, 0, 7, 7) - base.at4(0, 0, 7, 7)) > 0.0);

  // Jacobian columns at random pixel pairs are nonzero.
  Rng rng(11);
  const Tensor x0 = random_tensor({1, 2, 8, 8}, 12);
  const Tensor y0 = gfc.forward(constant(x0))->value;
  for (int k = 0; k < 3; ++k) {
    const auto pick = [&] { return static_cast<std::size_t>(rng.uniform() * 8); };
    const std::size_t ir = pick(), ic = pick(), orow = pick(), ocol = pick();
    Tensor x1 = x0;
    x1.at4(0, 1, ir, ic) += 1e-3;
    const Tensor y1 = gfc.forward(constant(x1))->value;
    CHECK(std::abs(y1.at4(0, 0, orow, ocol) - y0.at4(0, 0, orow, ocol)) > 1e-12);
  }
}

TEST_CASE("gfc: gradient check") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ParamStore store(seed);
    Gfc gfc(store, "gfc", 3);
    auto nv = named(store);
    const Var x = rand_param({2, 3, 5, 4}, seed);
    nv.emplace_back("x", x);
    const auto r = gradcheck([&] { return probe(gfc.forward(x), seed); }, nv);
    INFO("worst " << r.worst);
    CHECK(r.max_rel < kGradTol);
  }
}

TEST_CASE("hff: identical bands give the lifted band") {
  ParamStore store(3);
  Hff hff(store, "hff", 2, 4);
  hff.tie_lifts();
  const Var band = constant(random_tensor({1, 2, 6, 6}, 1));
  const AumaResult r = hff.forward(band, band, band);
  const Tensor lifted = conv2d(band, store.get("hff.lift_v.w"), store.get("hff.lift_v.b"))->value;
  CHECK(max_abs_diff(r.out->value, lifted) < 1e-14);
  Tensor total = r.weights[0]->value + r.weights[1]->value + r.weights[2]->value;
  for (double v : total.storage()) CHECK(std::abs(v - 1.0) < 1e-12);
}

TEST_CASE("hff and hfr: gradient checks") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ParamStore store(seed);
    Hff hff(store, "hff", 2, 4);
    Hfr hfr(store, "hfr", 4);
    auto nv = named(store);
    const Var v = rand_param({1, 2, 4, 4}, seed), h = rand_param({1, 2, 4, 4}, seed + 10),
              d = rand_param({1, 2, 4, 4}, seed + 20);
    nv.emplace_back("v", v);
    nv.emplace_back("h", h);
    nv.emplace_back("d", d);
    const auto r = gradcheck(
        [&] {
          const Bands b = hfr.forward(hff.forward(v, h, d).out);
          return add(add(probe(b.v, seed), probe(b.h, seed + 1)), probe(b.d, seed + 2));
        },
        nv);
    INFO("worst " << r.worst);
    CHECK(r.max_rel < kGradTol);
  }
}

TEST_CASE("hfr: zero head halves the candidates and keeps band dims") {
  ParamStore store(4);
  Hfr hfr(store, "hfr", 3, BlockInit::kIdentity);
  hfr.zero_head();
  const Var x = constant(random_tensor({2, 3, 5, 7}, 2));
  const Bands b = hfr.forward(x);
  for (const Var& band : {b.v, b.h, b.d}) {
    CHECK(band->dims() == x->dims());
    CHECK(max_abs_diff(band->value, 0.5 * x->value) == 0.0);
  }
  CHECK_THROWS_AS(hfr.forward(constant(Tensor({1, 2, 4, 4}))), Error);
}

TEST_CASE("glfig: attention shape and normalization") {
  ParamStore store(1);
  Glfig g(store, "glfig", 4, 16);
  const Var low = constant(random_tensor({1, 4, 32, 32}, 1)), high = constant(random_tensor({1, 4, 32, 32}, 2));
  const GlfigResult r = g.forward(low, high);
  CHECK(r.attention_low->dims() == Dims{1, 1, 256, 256});
  CHECK(r.low->dims() == low->dims());
  for (const Var& attn : {r.attention_low, r.attention_high}) {
    double worst = 0.0;
    for (std::size_t i = 0; i < 256; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < 256; ++j) total += attn->value[i * 256 + j];
      worst = std::max(worst, std::abs(total - 1.0));
    }
    CHECK(worst < 1e-12);
  }
  for (const AumaResult* a : {&r.guide_low, &r.guide_high}) {
    const Tensor total = a->weights[0]->value + a->weights[1]->value;
    for (double v : total.storage()) CHECK(std::abs(v - 1.0) < 1e-12);
  }
}

TEST_CASE("glfig: pinned guidance returns the originals") {
  ParamStore store(2);
  Glfig g(store, "glfig", 4, 4, BlockInit::kIdentity);
  const Var low = constant(random_tensor({1, 4, 8, 8}, 1)), high = constant(random_tensor({1, 4, 8, 8}, 2));
  const GlfigResult r = g.forward(low, high);
  CHECK(max_abs_diff(r.low->value, low->value) == 0.0);
  CHECK(max_abs_diff(r.high->value, high->value) == 0.0);
}

TEST_CASE("glfig: gradient check") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ParamStore store(seed);
    Glfig g(store, "glfig", 3, 3);
    auto nv = named(store);
    const Var low = rand_param({1, 3, 6, 5}, seed), high = rand_param({1, 3, 6, 5}, seed + 9);
    nv.emplace_back("low", low);
    nv.emplace_back("high", high);
    const auto r = gradcheck(
        [&] {
          const GlfigResult o = g.forward(low, high);
          return add(probe(o.low, seed), probe(o.high, seed + 1));
        },
        nv);
    INFO("worst " << r.worst);
    CHECK(r.max_rel < kGradTol);
  }
}

// ---------------------------------------------------------------------------------------------

TEST_CASE("pipeline: identity configuration and shapes") {
  for (BlockInit init : {BlockInit::kIdentity, BlockInit::kRandom}) {
    Pipeline model({}, 7, init);
    const Tensor x = random_tensor({2, 1, 64, 64}, 3, 0.0, 0.5);
    CHECK(rel_diff(model.forward(constant(x))->value, x) < 1e-6);
    const Tensor y = random_tensor({1, 1, 96, 128}, 4);
    CHECK(model.forward(constant(y))->dims() == y.dims());
  }
  Pipeline model({}, 1);
  CHECK_THROWS_AS(model.forward(constant(Tensor({1, 1, 30, 32}))), Error);
  CHECK_THROWS_AS(model.forward(constant(Tensor({1, 2, 32, 32}))), Error);
  PipelineConfig bad;
  bad.levels = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("pipeline: gradient check of the L1 loss on a 32x32 tile") {
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    Pipeline model({}, seed);
    Rng rng(seed + 100);
    for (double& w : model.head().weight->value.storage()) w = 2.0 * rng.uniform() - 1.0;
    const Var x = constant(random_tensor({1, 1, 32, 32}, seed, 0.0, 0.5));
    const Var target = constant(random_tensor({1, 1, 32, 32}, seed + 50, 0.0, 0.5));
    const auto r = gradcheck([&] { return l1_loss(model.forward(x), target); }, named(model.params()), 2, seed);
    INFO("worst " << r.worst << " over " << r.checked << ", skipped " << r.skipped);
    CHECK(r.max_rel < kGradTol);
    CHECK(r.skipped * 4 <= r.checked);
  }
}

TEST_CASE("pipeline: ablation drops the interaction blocks") {
  PipelineConfig no;
  no.use_glfig = false;
  Pipeline with({}, 1), without(no, 1);
  CHECK(without.params().scalar_count() < with.params().scalar_count());
  for (const auto& e : without.params().entries()) CHECK(e.first.find("glfig") == std::string::npos);
}

TEST_CASE("pipeline: forward and backward are bit-identical across runs") {
  auto run = [] {
    Pipeline model({}, 3);
    for (double& w : model.head().weight->value.storage()) w = 0.1;
    const Var x = constant(random_tensor({2, 1, 32, 32}, 1));
    const Var loss = l1_loss(model.forward(x), constant(random_tensor({2, 1, 32, 32}, 2)));
    backward(loss);
    std::vector<Tensor> grads{loss->value};
    for (const auto& e : model.params().entries()) grads.push_back(e.second->grad);
    return grads;
  };
  const auto a = run(), b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(bit_identical(a[i], b[i]));
}

TEST_CASE("pipeline: tiled correction covers a whole sinogram") {
  Pipeline model({}, 2, BlockInit::kIdentity);
  const Tensor sino = random_tensor({90, 100}, 8);
  CHECK(max_abs_diff(model.correct(sino), sino) < 1e-12);
  CHECK_THROWS_AS(model.correct(Tensor({2, 100})), Error);
}

TEST_CASE("pipeline: parameters round-trip through a directory") {
  const auto dir = std::filesystem::temp_directory_path() / "ringkit_net_params";
  std::filesystem::remove_all(dir);
  Pipeline model({}, 5);
  model.head().weight->value.fill(0.25);
  model.save(dir);
  const Pipeline back = Pipeline::load(dir);
  REQUIRE(back.params().entries().size() == model.params().entries().size());
  for (std::size_t i = 0; i < back.params().entries().size(); ++i) {
    CHECK(max_abs_diff(back.params().entries()[i].second->value, model.params().entries()[i].second->value) < 1e-6);
  }
  const auto manifest = ParamStore::read_manifest(dir);
  CHECK(manifest["extra"]["global_block"] == "gfc-simplified");
  std::filesystem::remove_all(dir);
}

// ---------------------------------------------------------------------------------------------

TEST_CASE("train: lr = 0 leaves the loss constant") {
  ToyDataConfig dc;
  dc.tiles = 2;
  dc.phantoms = 1;
  const ToyDataset ds = make_toy_dataset(dc, 1);
  Pipeline model({}, 1);
  TrainOptions opts;
  opts.lr = 0.0;
  opts.steps = 3;
  const TrainResult r = train_toy(model, ds, opts);
  REQUIRE(r.loss.size() == 3);
  CHECK(r.loss[1] == r.loss[0]);
  CHECK(r.loss[2] == r.loss[0]);
}

TEST_CASE("train: dataset tiles and guard rails") {
  ToyDataConfig dc;
  dc.tiles = 3;
  dc.phantoms = 2;
  const ToyDataset ds = make_toy_dataset(dc, 4);
  CHECK(ds.corrupted.dims() == Dims{3, 1, 64, 64});
  CHECK(max_abs_diff(ds.corrupted, ds.clean) > 0.0);
  CHECK(bit_identical(make_toy_dataset(dc, 4).corrupted, ds.corrupted));

  Pipeline model({}, 1);
  TrainOptions opts;
  opts.lr = 1e6;
  opts.steps = 4;
  CHECK_THROWS_AS(train_toy(model, ds, opts), Error);
  dc.tile = 500;
  CHECK_THROWS_AS(dc.validate(), Error);
}
