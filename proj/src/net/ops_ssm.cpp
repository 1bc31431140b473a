#include <cmath>

#include "ringkit/net/ops.hpp"

namespace ringkit::net {
namespace {

// Addresses one scan line: element t sits at base + pos(t) * stride.
struct Line {
  std::size_t base;
  std::size_t stride;
  std::size_t length;
  bool reverse;
  std::size_t at(std::size_t t) const { return base + (reverse ? length - 1 - t : t) * stride; }
};

template <class F>
void for_each_line(std::size_t B, std::size_t C, std::size_t H, std::size_t W, std::size_t axis, bool reverse,
                   F&& f) {
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t plane = (b * C + c) * H * W;
      if (axis == 3) {
        for (std::size_t r = 0; r < H; ++r) f(c, Line{plane + r * W, 1, W, reverse});
      } else {
        for (std::size_t col = 0; col < W; ++col) f(c, Line{plane + col, W, H, reverse});
      }
    }
  }
}

}  // namespace

Var ssm_scan(const Var& x, const Var& a, const Var& b, const Var& c, const Var& d, std::size_t axis,
             bool reverse) {
  const Dims& dx = x->dims();
  check_dims(dx.size() == 4, "ssm_scan", "expected [B,C,H,W], got " + dims_to_string(dx));
  check_dims(axis == 2 || axis == 3, "ssm_scan", "axis must be 2 or 3, got " + std::to_string(axis));
  const std::size_t B = dx[0], C = dx[1], H = dx[2], W = dx[3];
  for (const Var* p : {&a, &b, &c, &d}) {
    check_dims((*p)->dims() == Dims{C}, "ssm_scan", "parameters must be [" + std::to_string(C) + "]");
  }
  Tensor out(dx), h(dx);
  const Tensor& xv = x->value;
  for_each_line(B, C, H, W, axis, reverse, [&](std::size_t ch, const Line& line) {
    const double alpha = std::tanh(a->value[ch]), bb = b->value[ch], cc = c->value[ch], dd = d->value[ch];
    double state = 0.0;
    for (std::size_t t = 0; t < line.length; ++t) {
      const std::size_t i = line.at(t);
      state = alpha * state + bb * xv[i];
      h[i] = state;
      out[i] = cc * state + dd * xv[i];
    }
  });
  return make_node(std::move(out), {x, a, b, c, d}, "ssm_scan",
                   [=, h = std::move(h)](Node& self) {
                     Node& nx = *self.parents[0];
                     Node& na = *self.parents[1];
                     Node& nb = *self.parents[2];
                     Node& nc = *self.parents[3];
                     Node& nd = *self.parents[4];
                     std::vector<double> ga(C, 0.0), gb(C, 0.0), gc(C, 0.0), gd(C, 0.0);
                     Tensor* gx = nx.requires_grad ? &nx.grad_buffer() : nullptr;
                     for_each_line(B, C, H, W, axis, reverse, [&](std::size_t ch, const Line& line) {
                       const double alpha = std::tanh(na.value[ch]), bb = nb.value[ch], cc = nc.value[ch],
                                    dd = nd.value[ch];
                       double gh = 0.0;
                       for (std::size_t k = line.length; k-- > 0;) {
                         const std::size_t i = line.at(k);
                         const double gy = self.grad[i];
                         gh = cc * gy + alpha * gh;
                         const double xi = nx.value[i];
                         const double prev = k > 0 ? h[line.at(k - 1)] : 0.0;
                         if (gx) (*gx)[i] += bb * gh + dd * gy;
                         ga[ch] += gh * prev;
                         gb[ch] += gh * xi;
                         gc[ch] += gy * h[i];
                         gd[ch] += gy * xi;
                       }
                     });
                     for (std::size_t ch = 0; ch < C; ++ch) {
                       const double alpha = std::tanh(na.value[ch]);
                       if (na.requires_grad) na.grad_buffer()[ch] += ga[ch] * (1.0 - alpha * alpha);
                       if (nb.requires_grad) nb.grad_buffer()[ch] += gb[ch];
                       if (nc.requires_grad) nc.grad_buffer()[ch] += gc[ch];
                       if (nd.requires_grad) nd.grad_buffer()[ch] += gd[ch];
                     }
                   });
}

Var ssm_scan4(const Var& x, const Var& a, const Var& b, const Var& c, const Var& d) {
  const Var rows = scale(add(ssm_scan(x, a, b, c, d, 3, false), ssm_scan(x, a, b, c, d, 3, true)), 0.5);
  return scale(add(ssm_scan(rows, a, b, c, d, 2, false), ssm_scan(rows, a, b, c, d, 2, true)), 0.5);
}

}  // namespace ringkit::net
