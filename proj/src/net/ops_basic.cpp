#include <algorithm>
#include <array>
#include <cmath>

#include "ringkit/net/ops.hpp"

namespace ringkit::net {
namespace {

using Shape4 = std::array<std::size_t, 4>;

Shape4 pad4(const Dims& d) {
  Shape4 s{1, 1, 1, 1};
  const std::size_t off = 4 - d.size();
  for (std::size_t i = 0; i < d.size(); ++i) s[off + i] = d[i];
  return s;
}

Shape4 strides_for(const Shape4& s, const Shape4& out) {
  Shape4 st{};
  std::size_t acc = 1;
  for (int i = 3; i >= 0; --i) {
    st[i] = (s[i] == out[i]) ? acc : 0;
    acc *= s[i];
  }
  return st;
}

struct Broadcast {
  Dims out_dims;
  Shape4 out, sa, sb;
  bool same = false;
};

Broadcast broadcast(const Var& a, const Var& b, const char* op) {
  const Dims& da = a->dims();
  const Dims& db = b->dims();
  check_dims(da.size() == db.size() && da.size() <= 4, op,
             "rank mismatch " + dims_to_string(da) + " vs " + dims_to_string(db));
  Broadcast bc;
  bc.same = da == db;
  bc.out_dims.resize(da.size());
  for (std::size_t i = 0; i < da.size(); ++i) {
    check_dims(da[i] == db[i] || da[i] == 1 || db[i] == 1, op,
               "incompatible dims " + dims_to_string(da) + " vs " + dims_to_string(db));
    bc.out_dims[i] = std::max(da[i], db[i]);
  }
  bc.out = pad4(bc.out_dims);
  bc.sa = strides_for(pad4(da), bc.out);
  bc.sb = strides_for(pad4(db), bc.out);
  return bc;
}

// Calls f(out_index, a_index, b_index) over the broadcast output.
template <typename F>
void for_each_bc(const Broadcast& bc, F&& f) {
  std::size_t o = 0;
  for (std::size_t i0 = 0; i0 < bc.out[0]; ++i0) {
    for (std::size_t i1 = 0; i1 < bc.out[1]; ++i1) {
      for (std::size_t i2 = 0; i2 < bc.out[2]; ++i2) {
        const std::size_t ba = i0 * bc.sa[0] + i1 * bc.sa[1] + i2 * bc.sa[2];
        const std::size_t bb = i0 * bc.sb[0] + i1 * bc.sb[1] + i2 * bc.sb[2];
        for (std::size_t i3 = 0; i3 < bc.out[3]; ++i3, ++o) {
          f(o, ba + i3 * bc.sa[3], bb + i3 * bc.sb[3]);
        }
      }
    }
  }
}

template <typename Fwd, typename Bwd>
Var unary(const Var& x, const char* name, Fwd fwd, Bwd dfdx) {
  Tensor out(x->dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x->value[i]);
  return make_node(std::move(out), {x}, name, [dfdx](Node& self) {
    Node& in = *self.parents[0];
    if (!in.requires_grad) return;
    Tensor& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * dfdx(in.value[i], self.value[i]);
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  const Broadcast bc = broadcast(a, b, "add");
  Tensor out(bc.out_dims);
  if (bc.same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + b->value[i];
  } else {
    for_each_bc(bc, [&](std::size_t o, std::size_t ia, std::size_t ib) { out[o] = a->value[ia] + b->value[ib]; });
  }
  return make_node(std::move(out), {a, b}, "add", [bc](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    if (na.requires_grad) {
      Tensor& g = na.grad_buffer();
      for_each_bc(bc, [&](std::size_t o, std::size_t ia, std::size_t) { g[ia] += self.grad[o]; });
    }
    if (nb.requires_grad) {
      Tensor& g = nb.grad_buffer();
      for_each_bc(bc, [&](std::size_t o, std::size_t, std::size_t ib) { g[ib] += self.grad[o]; });
    }
  });
}

Var sub(const Var& a, const Var& b) { return add(a, scale(b, -1.0)); }

Var hadamard(const Var& a, const Var& b) {
  const Broadcast bc = broadcast(a, b, "hadamard");
  Tensor out(bc.out_dims);
  for_each_bc(bc, [&](std::size_t o, std::size_t ia, std::size_t ib) { out[o] = a->value[ia] * b->value[ib]; });
  return make_node(std::move(out), {a, b}, "hadamard", [bc](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    if (na.requires_grad) {
      Tensor& g = na.grad_buffer();
      for_each_bc(bc, [&](std::size_t o, std::size_t ia, std::size_t ib) { g[ia] += self.grad[o] * nb.value[ib]; });
    }
    if (nb.requires_grad) {
      Tensor& g = nb.grad_buffer();
      for_each_bc(bc, [&](std::size_t o, std::size_t ia, std::size_t ib) { g[ib] += self.grad[o] * na.value[ia]; });
    }
  });
}

Var scale(const Var& x, double s) {
  return unary(x, "scale", [s](double v) { return s * v; }, [s](double, double) { return s; });
}

Var relu(const Var& x) {
  return unary(x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& x) {
  return unary(x, "sigmoid", [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
               [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& x) {
  return unary(x, "tanh", [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var softmax(const Var& x, std::size_t axis) {
  const Dims& d = x->dims();
  check_dims(axis < d.size(), "softmax", "axis out of range for " + dims_to_string(d));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= d[i];
  for (std::size_t i = axis + 1; i < d.size(); ++i) inner *= d[i];
  const std::size_t n = d[axis];
  Tensor out(d);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double mx = -INFINITY;
      for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, x->value[base + k * inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double e = std::exp(x->value[base + k * inner] - mx);
        out[base + k * inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < n; ++k) out[base + k * inner] /= total;
    }
  }
  return make_node(std::move(out), {x}, "softmax", [outer, inner, n](Node& self) {
    Node& in_node = *self.parents[0];
    Tensor& g = in_node.grad_buffer();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        double dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) dot += self.grad[base + k * inner] * self.value[base + k * inner];
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t i = base + k * inner;
          g[i] += self.value[i] * (self.grad[i] - dot);
        }
      }
    }
  });
}

Var l1_loss(const Var& pred, const Var& target) {
  check_dims(pred->dims() == target->dims(), "l1_loss",
             "dims mismatch " + dims_to_string(pred->dims()) + " vs " + dims_to_string(target->dims()));
  const std::size_t n = pred->value.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::abs(pred->value[i] - target->value[i]);
  return make_node(Tensor({1}, acc / n), {pred, target}, "l1_loss", [n](Node& self) {
    const double g0 = self.grad[0] / n;
    Node& p = *self.parents[0];
    Node& t = *self.parents[1];
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = p.value[i] - t.value[i];
      const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      if (p.requires_grad) p.grad_buffer()[i] += g0 * s;
      if (t.requires_grad) t.grad_buffer()[i] -= g0 * s;
    }
  });
}

Var sum_all(const Var& x) {
  double acc = 0.0;
  for (double v : x->value.values()) acc += v;
  return make_node(Tensor({1}, acc), {x}, "sum_all", [](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
  });
}

namespace {

struct PoolShape {
  std::size_t b, c, hw;
};

PoolShape pool_shape(const Var& x, const char* op) {
  check_dims(x->dims().size() == 4, op, "expected [B,C,H,W], got " + dims_to_string(x->dims()));
  return {x->dims()[0], x->dims()[1], x->dims()[2] * x->dims()[3]};
}

// Spatial pooling reduces each (b, c) plane; channel pooling reduces across channels per pixel.
Dims pooled_dims(const Var& x, PoolAxis axis) {
  const Dims& d = x->dims();
  return axis == PoolAxis::kSpatial ? Dims{d[0], d[1], 1, 1} : Dims{d[0], 1, d[2], d[3]};
}

}  // namespace

Var global_avg_pool(const Var& x, PoolAxis axis) {
  const PoolShape s = pool_shape(x, "global_avg_pool");
  Tensor out(pooled_dims(x, axis));
  const double* v = x->value.data();
  if (axis == PoolAxis::kSpatial) {
    for (std::size_t p = 0; p < s.b * s.c; ++p) {
      double acc = 0.0;
      for (std::size_t i = 0; i < s.hw; ++i) acc += v[p * s.hw + i];
      out[p] = acc / s.hw;
    }
  } else {
    for (std::size_t b = 0; b < s.b; ++b) {
      for (std::size_t c = 0; c < s.c; ++c) {
        for (std::size_t i = 0; i < s.hw; ++i) out[b * s.hw + i] += v[(b * s.c + c) * s.hw + i];
      }
      for (std::size_t i = 0; i < s.hw; ++i) out[b * s.hw + i] /= s.c;
    }
  }
  return make_node(std::move(out), {x}, "global_avg_pool", [s, axis](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t b = 0; b < s.b; ++b) {
      for (std::size_t c = 0; c < s.c; ++c) {
        for (std::size_t i = 0; i < s.hw; ++i) {
          const std::size_t idx = (b * s.c + c) * s.hw + i;
          g[idx] += axis == PoolAxis::kSpatial ? self.grad[b * s.c + c] / s.hw : self.grad[b * s.hw + i] / s.c;
        }
      }
    }
  });
}

Var global_max_pool(const Var& x, PoolAxis axis) {
  const PoolShape s = pool_shape(x, "global_max_pool");
  Tensor out(pooled_dims(x, axis));
  std::vector<std::size_t> argmax(out.size());
  const double* v = x->value.data();
  if (axis == PoolAxis::kSpatial) {
    for (std::size_t p = 0; p < s.b * s.c; ++p) {
      std::size_t best = p * s.hw;
      for (std::size_t i = 1; i < s.hw; ++i) {
        if (v[p * s.hw + i] > v[best]) best = p * s.hw + i;
      }
      argmax[p] = best;
      out[p] = v[best];
    }
  } else {
    for (std::size_t b = 0; b < s.b; ++b) {
      for (std::size_t i = 0; i < s.hw; ++i) {
        std::size_t best = b * s.c * s.hw + i;
        for (std::size_t c = 1; c < s.c; ++c) {
          const std::size_t idx = (b * s.c + c) * s.hw + i;
          if (v[idx] > v[best]) best = idx;
        }
        argmax[b * s.hw + i] = best;
        out[b * s.hw + i] = v[best];
      }
    }
  }
  return make_node(std::move(out), {x}, "global_max_pool", [argmax = std::move(argmax)](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t k = 0; k < argmax.size(); ++k) g[argmax[k]] += self.grad[k];
  });
}

}  // namespace ringkit::net
