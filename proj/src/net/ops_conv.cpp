#include <algorithm>

#include "ringkit/net/ops.hpp"
#include "ringkit/simd.hpp"

namespace ringkit::net {

Var conv2d(const Var& x, const Var& weight, const Var& bias) {
  const Dims& xd = x->dims();
  const Dims& wd = weight->dims();
  check_dims(xd.size() == 4, "conv2d", "input must be [B,C,H,W], got " + dims_to_string(xd));
  check_dims(wd.size() == 4 && wd[2] == wd[3] && wd[2] % 2 == 1, "conv2d",
             "weight must be [Co,Ci,k,k] with odd k, got " + dims_to_string(wd));
  check_dims(wd[1] == xd[1], "conv2d",
             "input channels " + dims_to_string(xd) + " do not match weight " + dims_to_string(wd));
  if (bias) {
    check_dims(bias->dims() == Dims{wd[0]}, "conv2d", "bias must be [Co], got " + dims_to_string(bias->dims()));
  }
  const std::size_t B = xd[0], Ci = xd[1], H = xd[2], W = xd[3], Co = wd[0], k = wd[2];
  const long pad = static_cast<long>(k / 2);
  const std::size_t plane = H * W;
  const auto& simd = simd::kernels();

  // Calls f(w_index, dy, dx, y_begin, y_end, x_begin, x_end) for each kernel tap with the
  // output rows/columns whose shifted input stays inside the image.
  auto for_each_tap = [=](auto&& f) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      const long dy = static_cast<long>(ky) - pad;
      const std::size_t y0 = static_cast<std::size_t>(std::max(0L, -dy));
      const std::size_t y1 = static_cast<std::size_t>(std::min<long>(H, static_cast<long>(H) - dy));
      for (std::size_t kx = 0; kx < k; ++kx) {
        const long dx = static_cast<long>(kx) - pad;
        const std::size_t x0 = static_cast<std::size_t>(std::max(0L, -dx));
        const std::size_t x1 = static_cast<std::size_t>(std::min<long>(W, static_cast<long>(W) - dx));
        if (y0 >= y1 || x0 >= x1) continue;
        f(ky * k + kx, dy, dx, y0, y1, x0, x1);
      }
    }
  };

  Tensor out({B, Co, H, W});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t co = 0; co < Co; ++co) {
      double* dst = out.data() + (b * Co + co) * plane;
      if (bias) std::fill(dst, dst + plane, bias->value[co]);
      for (std::size_t ci = 0; ci < Ci; ++ci) {
        const double* src = x->value.data() + (b * Ci + ci) * plane;
        const double* w = weight->value.data() + (co * Ci + ci) * k * k;
        if (k == 1) {
          simd.axpy(w[0], src, dst, plane);
          continue;
        }
        for_each_tap([&](std::size_t t, long dy, long dx, std::size_t y0, std::size_t y1, std::size_t x0,
                         std::size_t x1) {
          for (std::size_t y = y0; y < y1; ++y) {
            simd.axpy(w[t], src + (y + dy) * W + x0 + dx, dst + y * W + x0, x1 - x0);
          }
        });
      }
    }
  }

  std::vector<Var> parents{x, weight};
  if (bias) parents.push_back(bias);
  return make_node(std::move(out), std::move(parents), "conv2d", [=](Node& self) {
    Node& nx = *self.parents[0];
    Node& nw = *self.parents[1];
    const auto& kern = simd::kernels();
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t co = 0; co < Co; ++co) {
        const double* g = self.grad.data() + (b * Co + co) * plane;
        if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
          double acc = 0.0;
          for (std::size_t i = 0; i < plane; ++i) acc += g[i];
          self.parents[2]->grad_buffer()[co] += acc;
        }
        for (std::size_t ci = 0; ci < Ci; ++ci) {
          const double* src = nx.value.data() + (b * Ci + ci) * plane;
          const double* w = nw.value.data() + (co * Ci + ci) * k * k;
          double* gx = nx.requires_grad ? nx.grad_buffer().data() + (b * Ci + ci) * plane : nullptr;
          double* gw = nw.requires_grad ? nw.grad_buffer().data() + (co * Ci + ci) * k * k : nullptr;
          if (k == 1) {
            if (gx) kern.axpy(w[0], g, gx, plane);
            if (gw) gw[0] += kern.dot(g, src, plane);
            continue;
          }
          for_each_tap([&](std::size_t t, long dy, long dx, std::size_t y0, std::size_t y1, std::size_t x0,
                           std::size_t x1) {
            double acc = 0.0;
            for (std::size_t y = y0; y < y1; ++y) {
              const std::size_t in_off = (y + dy) * W + x0 + dx;
              const std::size_t out_off = y * W + x0;
              if (gx) kern.axpy(w[t], g + out_off, gx + in_off, x1 - x0);
              if (gw) acc += kern.dot(g + out_off, src + in_off, x1 - x0);
            }
            if (gw) gw[t] += acc;
          });
        }
      }
    }
  });
}

}  // namespace ringkit::net
