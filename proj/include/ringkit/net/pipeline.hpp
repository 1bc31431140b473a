#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "json.hpp"
#include "ringkit/net/blocks.hpp"

namespace ringkit::net {

struct PipelineConfig {
  std::size_t levels = 2;
  std::size_t channels = 8;
  std::size_t token_grid = 16;
  bool use_glfig = true;

  void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

// Wavelet encoder/decoder over single-channel sinogram tiles [B, 1, H, W] (rows = angles).
// Encoder, per level: Haar analysis, approx lifted to `channels`, detail bands fused (HFF) and
// refined by the dense local block, approx refined by the global block, then GLFIG exchange;
// the next level analyses the corrected approx. Decoder, deepest first: HFR regenerates the
// detail bands from that level's corrected features and Haar synthesis merges them with the
// running approx. A zero-initialized 1x1 head maps back to one channel and the input tile is
// added, so a fresh model is the identity.
class Pipeline {
 public:
  Pipeline(const PipelineConfig& cfg, std::uint64_t seed, BlockInit init = BlockInit::kRandom);
  ~Pipeline();
  Pipeline(Pipeline&&) noexcept;
  Pipeline& operator=(Pipeline&&) noexcept;

  Var forward(const Var& tiles) const;
  // Runs the model over overlapping tiles (default 64x64, clipped to the sinogram and to a
  // multiple of 2^levels) and averages the overlaps. Sinogram rows are angles.
  Tensor correct(const Tensor& sinogram, std::size_t tile = 64, std::size_t batch = 8) const;

  const PipelineConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  Conv& head() { return head_; }

  // Parameter directory; the manifest records the config and the global-block variant label.
  void save(const std::filesystem::path& dir) const;
  static Pipeline load(const std::filesystem::path& dir);

 private:
  struct Level;
  PipelineConfig cfg_;
  ParamStore store_;
  std::vector<std::unique_ptr<Level>> levels_;
  Conv head_;
};

// Label written to model metadata: the global block uses a fixed-parameter diagonal scan.
inline constexpr const char* kGlobalBlockVariant = "gfc-simplified";

}  // namespace ringkit::net
