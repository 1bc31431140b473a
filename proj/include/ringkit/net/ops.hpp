#pragma once

#include <cstddef>
#include <vector>

#include "ringkit/net/autodiff.hpp"

// Differentiable ops on [batch, channels, height, width] tensors.
namespace ringkit::net {

// Elementwise with broadcasting: every axis of a and b must match or be 1.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& x, double s);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var tanh(const Var& x);
Var softmax(const Var& x, std::size_t axis);

// Mean absolute error against a target; sign(0) = 0 in the subgradient.
Var l1_loss(const Var& pred, const Var& target);
Var sum_all(const Var& x);

enum class PoolAxis { kSpatial, kChannel };
// kSpatial reduces H and W to 1; kChannel reduces C to 1.
Var global_avg_pool(const Var& x, PoolAxis axis);
// Gradient routes to the first maximal element.
Var global_max_pool(const Var& x, PoolAxis axis);

// weight [Co, Ci, k, k] with odd k, zero padding k/2; bias [Co] or null.
Var conv2d(const Var& x, const Var& weight, const Var& bias);

Var reshape(const Var& x, Dims dims);
Var concat_channels(const std::vector<Var>& xs);
Var slice_channels(const Var& x, std::size_t begin, std::size_t count);

// Batched over the first two axes: [B, G, M, K] x [B, G, K, N] -> [B, G, M, N].
Var matmul(const Var& a, const Var& b);
Var transpose_last2(const Var& x);
// [B, C, h, w] <-> [B, 1, h*w, C]
Var to_tokens(const Var& x);
Var from_tokens(const Var& t, std::size_t h, std::size_t w);

// Bin i covers [floor(i*H/oh), ceil((i+1)*H/oh)).
Var adaptive_avg_pool(const Var& x, std::size_t oh, std::size_t ow);
// Output pixel y reads input row floor(y * h / H).
Var upsample_nearest(const Var& x, std::size_t out_h, std::size_t out_w);

// Per-pixel normalization across channels with affine gamma, beta [C].
Var layer_norm_channels(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

// One-level orthonormal Haar analysis. Output channels are grouped [approx | V | H | D], each
// with the input's channel count; V is highpass along width (detector), lowpass along height.
Var haar_dwt(const Var& x);
Var haar_idwt(const Var& bands);

// Diagonal linear recurrence along height (axis 2) or width (axis 3):
//   h_t = tanh(a) * h_{t-1} + b * x_t,  y_t = c * h_t + d * x_t,  h_0 = 0
// with per-channel a, b, c, d of dims [C].
Var ssm_scan(const Var& x, const Var& a, const Var& b, const Var& c, const Var& d,
             std::size_t axis, bool reverse);
// Mean of both row directions followed by the mean of both column directions.
Var ssm_scan4(const Var& x, const Var& a, const Var& b, const Var& c, const Var& d);

}  // namespace ringkit::net
