#pragma once

#include <filesystem>

#include "json.hpp"
#include "ringkit/tensor.hpp"

namespace ringkit {

// RNGK0001 layout: 8-byte magic, u32-LE rank, rank x u32-LE extents, row-major f32-LE payload.
// A JSON sidecar `<path>.json` carries dims, dtype and free-form metadata.
void save_raw(const Tensor& tensor, const std::filesystem::path& path,
              const nlohmann::json& metadata = nlohmann::json::object());
Tensor load_raw(const std::filesystem::path& path);
nlohmann::json load_sidecar(const std::filesystem::path& path);

// Binary P5 PGM, maxval 65535, big-endian samples.
void save_pgm(const Image2D& image, double window_lo, double window_hi,
              const std::filesystem::path& path);
std::uint16_t pgm_sample(double v, double window_lo, double window_hi);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace ringkit
