#include "ringkit/net/blocks.hpp"

#include <algorithm>
#include <cmath>

#include "ringkit/error.hpp"

namespace ringkit::net {

namespace {

constexpr double kPinnedLogit = -1000.0;
constexpr double kOpenGate = 40.0;  // sigmoid(40) rounds to 1 in f64

void zero_conv(Conv& c) {
  c.weight->value.fill(0.0);
  if (c.bias) c.bias->value.fill(0.0);
}

}  // namespace

Conv make_conv(ParamStore& store, const std::string& name, std::size_t co, std::size_t ci, std::size_t k,
               bool zero, bool bias) {
  Conv c;
  const Dims dims{co, ci, k, k};
  c.weight = zero ? store.add_constant(name + ".w", dims, 0.0) : store.add_uniform(name + ".w", dims, ci * k * k);
  if (bias) c.bias = store.add_constant(name + ".b", {co}, 0.0);
  return c;
}

Conv make_identity_conv(ParamStore& store, const std::string& name, std::size_t channels) {
  Conv c = make_conv(store, name, channels, channels, 1, true);
  for (std::size_t i = 0; i < channels; ++i) c.weight->value[i * channels + i] = 1.0;
  return c;
}

// ---------------------------------------------------------------------------------------------

Auma::Auma(ParamStore& store, const std::string& prefix, std::size_t channels, std::size_t branches,
           BlockInit init, std::size_t passthrough)
    : channels_(channels) {
  require(branches >= 2, prefix + ": AUMA needs at least 2 branches");
  require(channels >= 1, prefix + ": AUMA needs at least 1 channel");
  const std::size_t mid = std::max<std::size_t>(1, channels / 2);
  squeeze_ = make_conv(store, prefix + ".squeeze", mid, channels, 1);
  excite_ = make_conv(store, prefix + ".excite", channels, mid, 1);
  spatial_ = make_conv(store, prefix + ".spatial", 1, 1, 1);
  local_ = make_conv(store, prefix + ".local", channels, channels, 1);
  for (std::size_t i = 0; i < branches; ++i) {
    branch_.push_back(make_conv(store, prefix + ".branch" + std::to_string(i), channels, channels, 1));
  }
  if (init == BlockInit::kIdentity) force_branch(passthrough);
}

void Auma::force_branch(std::size_t keep) {
  require(keep < branch_.size(), "AUMA passthrough branch out of range");
  for (std::size_t i = 0; i < branch_.size(); ++i) {
    zero_conv(branch_[i]);
    if (i != keep) branch_[i].bias->value.fill(kPinnedLogit);
  }
}

AumaResult Auma::forward(const std::vector<Var>& xs) const {
  check_dims(xs.size() == branch_.size(), "auma",
             "expected " + std::to_string(branch_.size()) + " inputs, got " + std::to_string(xs.size()));
  const Dims& d = xs[0]->dims();
  for (const auto& x : xs) {
    check_dims(x->dims() == d, "auma", "input dims mismatch " + dims_to_string(d) + " vs " + dims_to_string(x->dims()));
  }
  check_dims(d.size() == 4 && d[1] == channels_, "auma",
             "expected " + std::to_string(channels_) + " channels, got " + dims_to_string(d));
  Var x = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) x = add(x, xs[i]);

  const Var chan = excite_(relu(squeeze_(add(global_avg_pool(x, PoolAxis::kSpatial),
                                             global_max_pool(x, PoolAxis::kSpatial)))));
  const Var spat = spatial_(add(global_avg_pool(x, PoolAxis::kChannel), global_max_pool(x, PoolAxis::kChannel)));
  const Var s = add(add(chan, spat), local_(x));

  std::vector<Var> logits;
  for (const auto& conv : branch_) logits.push_back(conv(s));
  const std::size_t n = xs.size(), B = d[0], C = d[1], H = d[2], W = d[3];
  const Var w = reshape(softmax(reshape(concat_channels(logits), {B, n, C, H * W}), 1), {B, n * C, H, W});

  AumaResult r;
  for (std::size_t i = 0; i < n; ++i) {
    r.weights.push_back(slice_channels(w, i * C, C));
    const Var term = hadamard(r.weights.back(), xs[i]);
    r.out = r.out ? add(r.out, term) : term;
  }
  return r;
}

// ---------------------------------------------------------------------------------------------

Lfc::Lfc(ParamStore& store, const std::string& prefix, std::size_t channels, BlockInit init) {
  const std::size_t growth = std::max<std::size_t>(1, channels / 2);
  for (std::size_t i = 0; i < 4; ++i) {
    layers_.push_back(make_conv(store, prefix + ".dense" + std::to_string(i), growth, channels + i * growth, 3));
  }
  fuse_ = make_conv(store, prefix + ".fuse", channels, 4 * growth, 1, init == BlockInit::kIdentity);
}

Var Lfc::forward(const Var& x) const {
  std::vector<Var> all{x};
  std::vector<Var> outs;
  for (const auto& layer : layers_) {
    const Var in = all.size() == 1 ? all[0] : concat_channels(all);
    outs.push_back(relu(layer(in)));
    all.push_back(outs.back());
  }
  return add(x, fuse_(concat_channels(outs)));
}

// ---------------------------------------------------------------------------------------------

Gfc::Gfc(ParamStore& store, const std::string& prefix, std::size_t channels, BlockInit init)
    : expanded_(2 * channels) {
  const bool ident = init == BlockInit::kIdentity;
  ln_gamma_ = store.add_constant(prefix + ".ln.gamma", {channels}, 1.0);
  ln_beta_ = store.add_constant(prefix + ".ln.beta", {channels}, 0.0);
  expand_ = make_conv(store, prefix + ".expand", expanded_, channels, 1);
  gate_ = make_conv(store, prefix + ".gate", expanded_, channels, 1);
  proj_ = make_conv(store, prefix + ".proj", channels, expanded_, 1, ident);
  if (ident) {
    a_ = store.add_constant(prefix + ".ssm.a", {expanded_}, 0.0);
    b_ = store.add_constant(prefix + ".ssm.b", {expanded_}, 0.0);
    c_ = store.add_constant(prefix + ".ssm.c", {expanded_}, 0.0);
    d_ = store.add_constant(prefix + ".ssm.d", {expanded_}, 1.0);
    gate_.bias->value.fill(kOpenGate);
  } else {
    Tensor a({expanded_}), b({expanded_}), c({expanded_}), d({expanded_});
    Rng& rng = store.rng();
    for (std::size_t i = 0; i < expanded_; ++i) {
      a[i] = 0.5 + rng.uniform();  // tanh(a) in (0.46, 0.91): long-range memory
      b[i] = 2.0 * rng.uniform() - 1.0;
      c[i] = 2.0 * rng.uniform() - 1.0;
      d[i] = 0.5 + 0.5 * rng.uniform();
    }
    a_ = store.add(prefix + ".ssm.a", std::move(a));
    b_ = store.add(prefix + ".ssm.b", std::move(b));
    c_ = store.add(prefix + ".ssm.c", std::move(c));
    d_ = store.add(prefix + ".ssm.d", std::move(d));
  }
}

Var Gfc::forward(const Var& x) const {
  const Var n = layer_norm_channels(x, ln_gamma_, ln_beta_);
  const Var s = ssm_scan4(expand_(n), a_, b_, c_, d_);
  return add(x, proj_(hadamard(s, sigmoid(gate_(n)))));
}

// ---------------------------------------------------------------------------------------------

namespace {

Conv make_lift(ParamStore& store, const std::string& name, std::size_t cin, std::size_t channels, BlockInit init) {
  if (init == BlockInit::kIdentity && cin == channels) return make_identity_conv(store, name, channels);
  return make_conv(store, name, channels, cin, 1);
}

}  // namespace

Hff::Hff(ParamStore& store, const std::string& prefix, std::size_t cin, std::size_t channels, BlockInit init)
    : lift_{make_lift(store, prefix + ".lift_v", cin, channels, init),
            make_lift(store, prefix + ".lift_h", cin, channels, init),
            make_lift(store, prefix + ".lift_d", cin, channels, init)},
      auma_(store, prefix + ".auma", channels, 3, init, 0) {}

void Hff::tie_lifts() {
  for (int i = 1; i < 3; ++i) {
    lift_[i].weight->value = lift_[0].weight->value;
    lift_[i].bias->value = lift_[0].bias->value;
  }
}

AumaResult Hff::forward(const Var& v, const Var& h, const Var& d) const {
  check_dims(v->dims() == h->dims() && v->dims() == d->dims(), "hff",
             "band dims mismatch " + dims_to_string(v->dims()) + ", " + dims_to_string(h->dims()) + ", " +
                 dims_to_string(d->dims()));
  return auma_.forward({lift_[0](v), lift_[1](h), lift_[2](d)});
}

// ---------------------------------------------------------------------------------------------

Hfr::Hfr(ParamStore& store, const std::string& prefix, std::size_t channels, BlockInit init)
    : channels_(channels),
      cand_{make_lift(store, prefix + ".cand_v", channels, channels, init),
            make_lift(store, prefix + ".cand_h", channels, channels, init),
            make_lift(store, prefix + ".cand_d", channels, channels, init)},
      head_(make_conv(store, prefix + ".head", 3 * channels, channels, 1, init == BlockInit::kIdentity)) {
  if (init == BlockInit::kIdentity) head_.bias->value.fill(kOpenGate);
}

void Hfr::zero_head() { zero_conv(head_); }

Bands Hfr::forward(const Var& fused) const {
  check_dims(fused->dims().size() == 4 && fused->dims()[1] == channels_, "hfr",
             "expected " + std::to_string(channels_) + " channels, got " + dims_to_string(fused->dims()));
  const Var w = sigmoid(head_(fused));
  const std::size_t C = channels_;
  return {hadamard(cand_[0](fused), slice_channels(w, 0, C)), hadamard(cand_[1](fused), slice_channels(w, C, C)),
          hadamard(cand_[2](fused), slice_channels(w, 2 * C, C))};
}

// ---------------------------------------------------------------------------------------------

Glfig::Glfig(ParamStore& store, const std::string& prefix, std::size_t channels, std::size_t token_grid,
             BlockInit init)
    : channels_(channels),
      token_grid_(token_grid),
      q_low_(make_conv(store, prefix + ".q_low", channels, channels, 1)),
      k_low_(make_conv(store, prefix + ".k_low", channels, channels, 1)),
      v_low_(make_conv(store, prefix + ".v_low", channels, channels, 1)),
      q_high_(make_conv(store, prefix + ".q_high", channels, channels, 1)),
      k_high_(make_conv(store, prefix + ".k_high", channels, channels, 1)),
      v_high_(make_conv(store, prefix + ".v_high", channels, channels, 1)),
      lift_low_(make_conv(store, prefix + ".lift_low", channels, channels, 1)),
      lift_high_(make_conv(store, prefix + ".lift_high", channels, channels, 1)),
      guide_low_(store, prefix + ".guide_low", channels, 2, init, 1),
      guide_high_(store, prefix + ".guide_high", channels, 2, init, 1) {
  require(token_grid >= 1, prefix + ": token grid must be at least 1");
}

namespace {

// softmax(q k^T / sqrt(dim)) v on token sequences; returns (output tokens, attention matrix).
std::pair<Var, Var> cross_attention(const Var& q, const Var& k, const Var& v, std::size_t dim) {
  const Var logits = scale(matmul(q, transpose_last2(k)), 1.0 / std::sqrt(static_cast<double>(dim)));
  const Var attn = softmax(logits, 3);
  return {matmul(attn, v), attn};
}

}  // namespace

GlfigResult Glfig::forward(const Var& low, const Var& high) const {
  check_dims(low->dims() == high->dims(), "glfig",
             "dims mismatch " + dims_to_string(low->dims()) + " vs " + dims_to_string(high->dims()));
  check_dims(low->dims().size() == 4 && low->dims()[1] == channels_, "glfig",
             "expected " + std::to_string(channels_) + " channels, got " + dims_to_string(low->dims()));
  const std::size_t H = low->dims()[2], W = low->dims()[3];
  const std::size_t gh = std::min(token_grid_, H), gw = std::min(token_grid_, W);
  const Var pl = adaptive_avg_pool(low, gh, gw);
  const Var ph = adaptive_avg_pool(high, gh, gw);

  auto [tok_low, attn_low] = cross_attention(to_tokens(q_low_(pl)), to_tokens(k_high_(ph)), to_tokens(v_high_(ph)),
                                             channels_);
  auto [tok_high, attn_high] = cross_attention(to_tokens(q_high_(ph)), to_tokens(k_low_(pl)),
                                               to_tokens(v_low_(pl)), channels_);
  const Var inter_low = lift_low_(upsample_nearest(from_tokens(tok_low, gh, gw), H, W));
  const Var inter_high = lift_high_(upsample_nearest(from_tokens(tok_high, gh, gw), H, W));

  GlfigResult r;
  r.attention_low = attn_low;
  r.attention_high = attn_high;
  r.guide_low = guide_low_.forward({inter_low, low});
  r.guide_high = guide_high_.forward({inter_high, high});
  r.low = r.guide_low.out;
  r.high = r.guide_high.out;
  return r;
}

}  // namespace ringkit::net
