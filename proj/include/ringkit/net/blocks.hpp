#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ringkit/net/ops.hpp"
#include "ringkit/net/params.hpp"

namespace ringkit::net {

// kIdentity builds each block so that its forward pass returns its input (or the designated
// passthrough branch); the remaining weights stay random so gradients still reach them.
enum class BlockInit { kRandom, kIdentity };

struct Conv {
  Var weight;  // [co, ci, k, k]
  Var bias;    // [co] or null
  Var operator()(const Var& x) const { return conv2d(x, weight, bias); }
};

// Uniform fan-in init; `zero` registers all-zero weights instead.
Conv make_conv(ParamStore& store, const std::string& name, std::size_t co, std::size_t ci, std::size_t k,
               bool zero = false, bool bias = true);
// 1x1 conv with weight[c][c] = 1 for c < min(co, ci), zero bias.
Conv make_identity_conv(ParamStore& store, const std::string& name, std::size_t channels);

struct AumaResult {
  Var out;
  std::vector<Var> weights;  // one [B, C, H, W] map per branch; they sum to 1
};

class Auma {
 public:
  // Under kIdentity every weight map is pinned to `passthrough`.
  Auma(ParamStore& store, const std::string& prefix, std::size_t channels, std::size_t branches,
       BlockInit init = BlockInit::kRandom, std::size_t passthrough = 0);
  AumaResult forward(const std::vector<Var>& xs) const;
  // Zeroes every branch conv and biases all but `keep` to -1000, so w_keep = 1 exactly.
  void force_branch(std::size_t keep);
  std::size_t branches() const { return branch_.size(); }

 private:
  std::size_t channels_;
  Conv squeeze_, excite_, spatial_, local_;
  std::vector<Conv> branch_;
};

// Dense local block: four 3x3+relu layers on the running concatenation, 1x1 fusion, residual.
class Lfc {
 public:
  Lfc(ParamStore& store, const std::string& prefix, std::size_t channels, BlockInit init = BlockInit::kRandom);
  Var forward(const Var& x) const;

 private:
  std::vector<Conv> layers_;
  Conv fuse_;
};

// Global block: channel layer norm, 1x1 expand, four-direction diagonal state-space scan,
// sigmoid gate, 1x1 projection, residual.
class Gfc {
 public:
  Gfc(ParamStore& store, const std::string& prefix, std::size_t channels, BlockInit init = BlockInit::kRandom);
  Var forward(const Var& x) const;
  std::size_t expanded() const { return expanded_; }

 private:
  std::size_t expanded_;
  Var ln_gamma_, ln_beta_;
  Conv expand_, gate_, proj_;
  Var a_, b_, c_, d_;
};

// Fuses V, H, D detail bands (cin channels each) into one c-channel map.
class Hff {
 public:
  Hff(ParamStore& store, const std::string& prefix, std::size_t cin, std::size_t channels,
      BlockInit init = BlockInit::kRandom);
  AumaResult forward(const Var& v, const Var& h, const Var& d) const;
  // Testing hook: copies the V lift onto the H and D lifts.
  void tie_lifts();

 private:
  Conv lift_[3];
  Auma auma_;
};

struct Bands {
  Var v, h, d;
};

class Hfr {
 public:
  Hfr(ParamStore& store, const std::string& prefix, std::size_t channels, BlockInit init = BlockInit::kRandom);
  // Each band is its candidate 1x1 map times a sigmoid weight map from a shared head.
  Bands forward(const Var& fused) const;
  // Testing hook: zero head weights and bias, so every weight map is 0.5.
  void zero_head();

 private:
  std::size_t channels_;
  Conv cand_[3];
  Conv head_;
};

struct GlfigResult {
  Var low, high;
  Var attention_low, attention_high;  // [B, 1, T, T]
  AumaResult guide_low, guide_high;
};

// Cross-attention exchange between the approximation and detail features at a pooled token grid,
// then AUMA fusion of each interaction map with its original (branch order: interact, original).
class Glfig {
 public:
  Glfig(ParamStore& store, const std::string& prefix, std::size_t channels, std::size_t token_grid,
        BlockInit init = BlockInit::kRandom);
  GlfigResult forward(const Var& low, const Var& high) const;
  Auma& guide_low() { return guide_low_; }
  Auma& guide_high() { return guide_high_; }

 private:
  std::size_t channels_, token_grid_;
  Conv q_low_, k_low_, v_low_, q_high_, k_high_, v_high_, lift_low_, lift_high_;
  Auma guide_low_, guide_high_;
};

}  // namespace ringkit::net
