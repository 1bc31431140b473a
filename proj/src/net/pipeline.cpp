#include "ringkit/net/pipeline.hpp"

#include <algorithm>
#include <optional>

#include "ringkit/error.hpp"

namespace ringkit::net {

void PipelineConfig::validate() const {
  if (levels < 1) throw_config("network.levels must be >= 1");
  if (channels < 2) throw_config("network.channels must be >= 2");
  if (token_grid < 1) throw_config("network.token_grid must be >= 1");
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = {{"levels", c.levels}, {"channels", c.channels}, {"token_grid", c.token_grid}, {"use_glfig", c.use_glfig}};
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
  c.levels = j.at("levels").get<std::size_t>();
  c.channels = j.at("channels").get<std::size_t>();
  c.token_grid = j.at("token_grid").get<std::size_t>();
  c.use_glfig = j.at("use_glfig").get<bool>();
}

struct Pipeline::Level {
  Conv lift_low;
  Hff hff;
  Lfc lfc;
  Gfc gfc;
  std::optional<Glfig> glfig;
  Hfr hfr;

  Level(ParamStore& s, const std::string& p, std::size_t cin, const PipelineConfig& cfg, BlockInit init)
      : lift_low(make_conv(s, p + ".lift_low", cfg.channels, cin, 1)),
        hff(s, p + ".hff", cin, cfg.channels, init),
        lfc(s, p + ".lfc", cfg.channels, init),
        gfc(s, p + ".gfc", cfg.channels, init),
        glfig(cfg.use_glfig ? std::optional<Glfig>(std::in_place, s, p + ".glfig", cfg.channels, cfg.token_grid, init)
                            : std::nullopt),
        hfr(s, p + ".hfr", cfg.channels, init) {}
};

Pipeline::Pipeline(const PipelineConfig& cfg, std::uint64_t seed, BlockInit init) : cfg_(cfg), store_(seed) {
  cfg_.validate();
  for (std::size_t l = 0; l < cfg_.levels; ++l) {
    levels_.push_back(std::make_unique<Level>(store_, "level" + std::to_string(l), l == 0 ? 1 : cfg_.channels,
                                              cfg_, init));
  }
  head_ = make_conv(store_, "head", 1, cfg_.channels, 1, true);
}

Pipeline::~Pipeline() = default;
Pipeline::Pipeline(Pipeline&&) noexcept = default;
Pipeline& Pipeline::operator=(Pipeline&&) noexcept = default;

Var Pipeline::forward(const Var& tiles) const {
  const Dims& d = tiles->dims();
  const std::size_t m = std::size_t{1} << cfg_.levels;
  check_dims(d.size() == 4 && d[1] == 1, "pipeline", "expected [B,1,H,W], got " + dims_to_string(d));
  check_dims(d[2] % m == 0 && d[3] % m == 0, "pipeline",
             "tile extents must be divisible by " + std::to_string(m) + ", got " + dims_to_string(d));

  std::vector<Var> highs;
  Var cur = tiles;
  for (const auto& level : levels_) {
    const std::size_t cin = cur->dims()[1];
    const Var bands = haar_dwt(cur);
    Var low = level->lift_low(slice_channels(bands, 0, cin));
    Var high = level->hff
                   .forward(slice_channels(bands, cin, cin), slice_channels(bands, 2 * cin, cin),
                            slice_channels(bands, 3 * cin, cin))
                   .out;
    high = level->lfc.forward(high);
    low = level->gfc.forward(low);
    if (level->glfig) {
      const GlfigResult g = level->glfig->forward(low, high);
      low = g.low;
      high = g.high;
    }
    highs.push_back(high);
    cur = low;
  }
  for (std::size_t l = levels_.size(); l-- > 0;) {
    const Bands b = levels_[l]->hfr.forward(highs[l]);
    cur = haar_idwt(concat_channels({cur, b.v, b.h, b.d}));
  }
  return add(tiles, head_(cur));
}

namespace {

std::vector<std::size_t> tile_starts(std::size_t extent, std::size_t tile) {
  std::vector<std::size_t> starts;
  for (std::size_t s = 0;; s += tile) {
    if (s + tile >= extent) {
      starts.push_back(extent - tile);
      break;
    }
    starts.push_back(s);
  }
  return starts;
}

}  // namespace

Tensor Pipeline::correct(const Tensor& sino, std::size_t tile, std::size_t batch) const {
  require(sino.rank() == 2, "pipeline correct: sinogram must be 2-D");
  const std::size_t m = std::size_t{1} << cfg_.levels;
  const std::size_t rows = sino.dim(0), cols = sino.dim(1);
  const std::size_t th = std::min(tile, rows) / m * m, tw = std::min(tile, cols) / m * m;
  require(th > 0 && tw > 0 && batch > 0,
          "pipeline correct: sinogram " + dims_to_string(sino.dims()) + " smaller than " + std::to_string(m));

  struct Pos {
    std::size_t r, c;
  };
  std::vector<Pos> pos;
  for (std::size_t r : tile_starts(rows, th)) {
    for (std::size_t c : tile_starts(cols, tw)) pos.push_back({r, c});
  }
  Tensor acc({rows, cols}), count({rows, cols});
  for (std::size_t first = 0; first < pos.size(); first += batch) {
    const std::size_t n = std::min(batch, pos.size() - first);
    Tensor in({n, 1, th, tw});
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t y = 0; y < th; ++y) {
        for (std::size_t x = 0; x < tw; ++x) in.at4(k, 0, y, x) = sino(pos[first + k].r + y, pos[first + k].c + x);
      }
    }
    const Var out = forward(constant(std::move(in)));
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t y = 0; y < th; ++y) {
        for (std::size_t x = 0; x < tw; ++x) {
          acc(pos[first + k].r + y, pos[first + k].c + x) += out->value.at4(k, 0, y, x);
          count(pos[first + k].r + y, pos[first + k].c + x) += 1.0;
        }
      }
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] /= count[i];
  return acc;
}

void Pipeline::save(const std::filesystem::path& dir) const {
  store_.save(dir, {{"pipeline", cfg_}, {"global_block", kGlobalBlockVariant}, {"wavelet", "haar"}});
}

Pipeline Pipeline::load(const std::filesystem::path& dir) {
  const nlohmann::json manifest = ParamStore::read_manifest(dir);
  const PipelineConfig cfg = manifest.at("extra").at("pipeline").get<PipelineConfig>();
  Pipeline p(cfg, manifest.at("seed").get<std::uint64_t>());
  p.store_.load(dir);
  return p;
}

}  // namespace ringkit::net
