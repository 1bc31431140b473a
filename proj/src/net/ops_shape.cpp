#include <algorithm>
#include <cmath>

#include "ringkit/net/ops.hpp"
#include "ringkit/simd.hpp"

namespace ringkit::net {
namespace {

void require4(const Var& x, const char* op) {
  check_dims(x->dims().size() == 4, op, "expected [B,C,H,W], got " + dims_to_string(x->dims()));
}

}  // namespace

Var reshape(const Var& x, Dims dims) {
  check_dims(dims_product(dims) == x->value.size(), "reshape",
             "cannot view " + dims_to_string(x->dims()) + " as " + dims_to_string(dims));
  return make_node(x->value.reshaped(dims), {x}, "reshape", [](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var concat_channels(const std::vector<Var>& xs) {
  check_dims(!xs.empty(), "concat_channels", "no inputs");
  for (const auto& x : xs) require4(x, "concat_channels");
  const Dims& d0 = xs[0]->dims();
  std::size_t total = 0;
  std::vector<std::size_t> offsets;
  for (const auto& x : xs) {
    const Dims& d = x->dims();
    check_dims(d[0] == d0[0] && d[2] == d0[2] && d[3] == d0[3], "concat_channels",
               "dims mismatch " + dims_to_string(d0) + " vs " + dims_to_string(d));
    offsets.push_back(total);
    total += d[1];
  }
  const std::size_t B = d0[0], plane = d0[2] * d0[3];
  Tensor out({B, total, d0[2], d0[3]});
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const std::size_t c = xs[k]->dims()[1];
    for (std::size_t b = 0; b < B; ++b) {
      std::copy_n(xs[k]->value.data() + b * c * plane, c * plane,
                  out.data() + (b * total + offsets[k]) * plane);
    }
  }
  return make_node(std::move(out), xs, "concat_channels", [offsets, total, B, plane](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& p = *self.parents[k];
      if (!p.requires_grad) continue;
      const std::size_t c = p.dims()[1];
      Tensor& g = p.grad_buffer();
      for (std::size_t b = 0; b < B; ++b) {
        const double* src = self.grad.data() + (b * total + offsets[k]) * plane;
        double* dst = g.data() + b * c * plane;
        for (std::size_t i = 0; i < c * plane; ++i) dst[i] += src[i];
      }
    }
  });
}

Var slice_channels(const Var& x, std::size_t begin, std::size_t count) {
  require4(x, "slice_channels");
  const Dims& d = x->dims();
  check_dims(begin + count <= d[1] && count > 0, "slice_channels",
             "range [" + std::to_string(begin) + ", " + std::to_string(begin + count) + ") outside " +
                 dims_to_string(d));
  const std::size_t B = d[0], C = d[1], plane = d[2] * d[3];
  Tensor out({B, count, d[2], d[3]});
  for (std::size_t b = 0; b < B; ++b) {
    std::copy_n(x->value.data() + (b * C + begin) * plane, count * plane, out.data() + b * count * plane);
  }
  return make_node(std::move(out), {x}, "slice_channels", [=](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t b = 0; b < B; ++b) {
      const double* src = self.grad.data() + b * count * plane;
      double* dst = g.data() + (b * C + begin) * plane;
      for (std::size_t i = 0; i < count * plane; ++i) dst[i] += src[i];
    }
  });
}

namespace {

void transpose_into(const double* src, std::size_t rows, std::size_t cols, double* dst) {
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
  }
}

// C[M,N] += A[M,K] * B[K,N], all row-major. The SIMD kernels run along whichever of K and N is
// longer; attention products are very unbalanced (K or N can be 8 against 256).
void gemm_acc(const double* A, const double* B, double* C, std::size_t M, std::size_t K, std::size_t N,
              std::vector<double>& scratch) {
  const auto& kern = simd::kernels();
  if (N >= K) {
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t k = 0; k < K; ++k) kern.axpy(A[i * K + k], B + k * N, C + i * N, N);
    }
    return;
  }
  scratch.resize(K * N);
  transpose_into(B, K, N, scratch.data());
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < N; ++j) C[i * N + j] += kern.dot(A + i * K, scratch.data() + j * K, K);
  }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require4(a, "matmul");
  require4(b, "matmul");
  const Dims& da = a->dims();
  const Dims& db = b->dims();
  check_dims(da[0] == db[0] && da[1] == db[1] && da[3] == db[2], "matmul",
             "dims mismatch " + dims_to_string(da) + " x " + dims_to_string(db));
  const std::size_t batch = da[0] * da[1], M = da[2], K = da[3], N = db[3];
  Tensor out({da[0], da[1], M, N});
  std::vector<double> scratch;
  for (std::size_t p = 0; p < batch; ++p) {
    gemm_acc(a->value.data() + p * M * K, b->value.data() + p * K * N, out.data() + p * M * N, M, K, N, scratch);
  }
  return make_node(std::move(out), {a, b}, "matmul", [=](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    std::vector<double> tr, scratch2;
    for (std::size_t p = 0; p < batch; ++p) {
      const double* A = na.value.data() + p * M * K;
      const double* Bm = nb.value.data() + p * K * N;
      const double* G = self.grad.data() + p * M * N;
      if (na.requires_grad) {
        // gA[M,K] += G[M,N] * B^T[N,K]
        tr.resize(N * K);
        transpose_into(Bm, K, N, tr.data());
        gemm_acc(G, tr.data(), na.grad_buffer().data() + p * M * K, M, N, K, scratch2);
      }
      if (nb.requires_grad) {
        // gB[K,N] += A^T[K,M] * G[M,N]
        tr.resize(K * M);
        transpose_into(A, M, K, tr.data());
        gemm_acc(tr.data(), G, nb.grad_buffer().data() + p * K * N, K, M, N, scratch2);
      }
    }
  });
}

Var transpose_last2(const Var& x) {
  require4(x, "transpose_last2");
  const Dims& d = x->dims();
  const std::size_t batch = d[0] * d[1], M = d[2], N = d[3];
  Tensor out({d[0], d[1], N, M});
  for (std::size_t p = 0; p < batch; ++p) {
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t j = 0; j < N; ++j) out[p * M * N + j * M + i] = x->value[p * M * N + i * N + j];
    }
  }
  return make_node(std::move(out), {x}, "transpose_last2", [=](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t p = 0; p < batch; ++p) {
      for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = 0; j < N; ++j) g[p * M * N + i * N + j] += self.grad[p * M * N + j * M + i];
      }
    }
  });
}

Var to_tokens(const Var& x) {
  require4(x, "to_tokens");
  const Dims& d = x->dims();
  const std::size_t B = d[0], C = d[1], T = d[2] * d[3];
  Tensor out({B, 1, T, C});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t t = 0; t < T; ++t) out[(b * T + t) * C + c] = x->value[(b * C + c) * T + t];
    }
  }
  return make_node(std::move(out), {x}, "to_tokens", [=](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t t = 0; t < T; ++t) g[(b * C + c) * T + t] += self.grad[(b * T + t) * C + c];
      }
    }
  });
}

Var from_tokens(const Var& t, std::size_t h, std::size_t w) {
  require4(t, "from_tokens");
  const Dims& d = t->dims();
  check_dims(d[1] == 1 && d[2] == h * w, "from_tokens",
             "token dims " + dims_to_string(d) + " do not match grid " + std::to_string(h) + "x" + std::to_string(w));
  const std::size_t B = d[0], T = d[2], C = d[3];
  Tensor out({B, C, h, w});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t k = 0; k < T; ++k) out[(b * C + c) * T + k] = t->value[(b * T + k) * C + c];
    }
  }
  return make_node(std::move(out), {t}, "from_tokens", [=](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t k = 0; k < T; ++k) g[(b * T + k) * C + c] += self.grad[(b * C + c) * T + k];
      }
    }
  });
}

Var adaptive_avg_pool(const Var& x, std::size_t oh, std::size_t ow) {
  require4(x, "adaptive_avg_pool");
  const Dims& d = x->dims();
  const std::size_t B = d[0], C = d[1], H = d[2], W = d[3];
  check_dims(oh >= 1 && ow >= 1 && oh <= H && ow <= W, "adaptive_avg_pool",
             "grid " + std::to_string(oh) + "x" + std::to_string(ow) + " invalid for " + dims_to_string(d));
  auto lo = [](std::size_t i, std::size_t in, std::size_t out) { return i * in / out; };
  auto hi = [](std::size_t i, std::size_t in, std::size_t out) { return ((i + 1) * in + out - 1) / out; };
  Tensor out({B, C, oh, ow});
  for (std::size_t p = 0; p < B * C; ++p) {
    const double* src = x->value.data() + p * H * W;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        double acc = 0.0;
        const std::size_t r0 = lo(i, H, oh), r1 = hi(i, H, oh), c0 = lo(j, W, ow), c1 = hi(j, W, ow);
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t c = c0; c < c1; ++c) acc += src[r * W + c];
        }
        out[(p * oh + i) * ow + j] = acc / static_cast<double>((r1 - r0) * (c1 - c0));
      }
    }
  }
  return make_node(std::move(out), {x}, "adaptive_avg_pool", [=](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t p = 0; p < B * C; ++p) {
      double* dst = g.data() + p * H * W;
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          const std::size_t r0 = lo(i, H, oh), r1 = hi(i, H, oh), c0 = lo(j, W, ow), c1 = hi(j, W, ow);
          const double v = self.grad[(p * oh + i) * ow + j] / static_cast<double>((r1 - r0) * (c1 - c0));
          for (std::size_t r = r0; r < r1; ++r) {
            for (std::size_t c = c0; c < c1; ++c) dst[r * W + c] += v;
          }
        }
      }
    }
  });
}

Var upsample_nearest(const Var& x, std::size_t out_h, std::size_t out_w) {
  require4(x, "upsample_nearest");
  const Dims& d = x->dims();
  const std::size_t B = d[0], C = d[1], h = d[2], w = d[3];
  check_dims(out_h >= h && out_w >= w, "upsample_nearest", "target smaller than " + dims_to_string(d));
  Tensor out({B, C, out_h, out_w});
  for (std::size_t p = 0; p < B * C; ++p) {
    for (std::size_t y = 0; y < out_h; ++y) {
      const std::size_t sy = y * h / out_h;
      for (std::size_t xx = 0; xx < out_w; ++xx) {
        out[(p * out_h + y) * out_w + xx] = x->value[(p * h + sy) * w + xx * w / out_w];
      }
    }
  }
  return make_node(std::move(out), {x}, "upsample_nearest", [=](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t p = 0; p < B * C; ++p) {
      for (std::size_t y = 0; y < out_h; ++y) {
        const std::size_t sy = y * h / out_h;
        for (std::size_t xx = 0; xx < out_w; ++xx) {
          g[(p * h + sy) * w + xx * w / out_w] += self.grad[(p * out_h + y) * out_w + xx];
        }
      }
    }
  });
}

Var layer_norm_channels(const Var& x, const Var& gamma, const Var& beta, double eps) {
  require4(x, "layer_norm_channels");
  const Dims& d = x->dims();
  const std::size_t B = d[0], C = d[1], P = d[2] * d[3];
  check_dims(gamma->dims() == Dims{C} && beta->dims() == Dims{C}, "layer_norm_channels",
             "gamma/beta must be [" + std::to_string(C) + "]");
  Tensor out(d), xhat(d);
  std::vector<double> inv(B * P);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t p = 0; p < P; ++p) {
      double mean = 0.0;
      for (std::size_t c = 0; c < C; ++c) mean += x->value[(b * C + c) * P + p];
      mean /= C;
      double var = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        const double t = x->value[(b * C + c) * P + p] - mean;
        var += t * t;
      }
      var /= C;
      const double iv = 1.0 / std::sqrt(var + eps);
      inv[b * P + p] = iv;
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t i = (b * C + c) * P + p;
        xhat[i] = (x->value[i] - mean) * iv;
        out[i] = gamma->value[c] * xhat[i] + beta->value[c];
      }
    }
  }
  return make_node(std::move(out), {x, gamma, beta}, "layer_norm_channels",
                   [=, xhat = std::move(xhat), inv = std::move(inv)](Node& self) {
                     Node& nx = *self.parents[0];
                     Node& ng = *self.parents[1];
                     Node& nb = *self.parents[2];
                     std::vector<double> gh(C);
                     for (std::size_t b = 0; b < B; ++b) {
                       for (std::size_t p = 0; p < P; ++p) {
                         double m1 = 0.0, m2 = 0.0;
                         for (std::size_t c = 0; c < C; ++c) {
                           const std::size_t i = (b * C + c) * P + p;
                           if (ng.requires_grad) ng.grad_buffer()[c] += self.grad[i] * xhat[i];
                           if (nb.requires_grad) nb.grad_buffer()[c] += self.grad[i];
                           gh[c] = self.grad[i] * ng.value[c];
                           m1 += gh[c];
                           m2 += gh[c] * xhat[i];
                         }
                         if (!nx.requires_grad) continue;
                         m1 /= C;
                         m2 /= C;
                         Tensor& gx = nx.grad_buffer();
                         for (std::size_t c = 0; c < C; ++c) {
                           const std::size_t i = (b * C + c) * P + p;
                           gx[i] += inv[b * P + p] * (gh[c] - m1 - xhat[i] * m2);
                         }
                       }
                     }
                   });
}

namespace {

// Orthonormal 2x2 Haar butterfly; it is its own inverse up to the band/pixel layout.
void haar_forward(const double* x, std::size_t W, std::size_t h, std::size_t w, double* a, double* v,
                  double* hh, double* d) {
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const double p00 = x[(2 * i) * W + 2 * j], p01 = x[(2 * i) * W + 2 * j + 1];
      const double p10 = x[(2 * i + 1) * W + 2 * j], p11 = x[(2 * i + 1) * W + 2 * j + 1];
      const std::size_t o = i * w + j;
      a[o] = 0.5 * (p00 + p01 + p10 + p11);
      v[o] = 0.5 * (p00 - p01 + p10 - p11);
      hh[o] = 0.5 * (p00 + p01 - p10 - p11);
      d[o] = 0.5 * (p00 - p01 - p10 + p11);
    }
  }
}

void haar_inverse(const double* a, const double* v, const double* hh, const double* d, std::size_t h,
                  std::size_t w, double* x, std::size_t W, bool accumulate) {
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t o = i * w + j;
      const double p00 = 0.5 * (a[o] + v[o] + hh[o] + d[o]);
      const double p01 = 0.5 * (a[o] - v[o] + hh[o] - d[o]);
      const double p10 = 0.5 * (a[o] + v[o] - hh[o] - d[o]);
      const double p11 = 0.5 * (a[o] - v[o] - hh[o] + d[o]);
      double* r0 = x + (2 * i) * W + 2 * j;
      double* r1 = x + (2 * i + 1) * W + 2 * j;
      if (accumulate) {
        r0[0] += p00;
        r0[1] += p01;
        r1[0] += p10;
        r1[1] += p11;
      } else {
        r0[0] = p00;
        r0[1] = p01;
        r1[0] = p10;
        r1[1] = p11;
      }
    }
  }
}

}  // namespace

Var haar_dwt(const Var& x) {
  require4(x, "haar_dwt");
  const Dims& d = x->dims();
  const std::size_t B = d[0], C = d[1], H = d[2], W = d[3];
  check_dims(H % 2 == 0 && W % 2 == 0 && H >= 2 && W >= 2, "haar_dwt",
             "spatial extents must be even, got " + dims_to_string(d));
  const std::size_t h = H / 2, w = W / 2, q = h * w;
  Tensor out({B, 4 * C, h, w});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      double* base = out.data() + b * 4 * C * q;
      haar_forward(x->value.data() + (b * C + c) * H * W, W, h, w, base + c * q, base + (C + c) * q,
                   base + (2 * C + c) * q, base + (3 * C + c) * q);
    }
  }
  return make_node(std::move(out), {x}, "haar_dwt", [=](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t c = 0; c < C; ++c) {
        const double* base = self.grad.data() + b * 4 * C * q;
        haar_inverse(base + c * q, base + (C + c) * q, base + (2 * C + c) * q, base + (3 * C + c) * q, h, w,
                     g.data() + (b * C + c) * H * W, W, true);
      }
    }
  });
}

Var haar_idwt(const Var& bands) {
  require4(bands, "haar_idwt");
  const Dims& d = bands->dims();
  check_dims(d[1] % 4 == 0, "haar_idwt", "channels must be 4 x C, got " + dims_to_string(d));
  const std::size_t B = d[0], C = d[1] / 4, h = d[2], w = d[3], H = 2 * h, W = 2 * w, q = h * w;
  Tensor out({B, C, H, W});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const double* base = bands->value.data() + b * 4 * C * q;
      haar_inverse(base + c * q, base + (C + c) * q, base + (2 * C + c) * q, base + (3 * C + c) * q, h, w,
                   out.data() + (b * C + c) * H * W, W, false);
    }
  }
  return make_node(std::move(out), {bands}, "haar_idwt", [=](Node& self) {
    Tensor& g = self.parents[0]->grad_buffer();
    std::vector<double> a(q), v(q), hh(q), dd(q);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t c = 0; c < C; ++c) {
        haar_forward(self.grad.data() + (b * C + c) * H * W, W, h, w, a.data(), v.data(), hh.data(), dd.data());
        double* base = g.data() + b * 4 * C * q;
        for (std::size_t i = 0; i < q; ++i) {
          base[c * q + i] += a[i];
          base[(C + c) * q + i] += v[i];
          base[(2 * C + c) * q + i] += hh[i];
          base[(3 * C + c) * q + i] += dd[i];
        }
      }
    }
  });
}

}  // namespace ringkit::net
