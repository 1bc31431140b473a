#include "ringkit/error.hpp"
#include "ringkit/io.hpp"
#include "ringkit/wavelet.hpp"

namespace ringkit {

void save_pyramid(const WaveletPyramid& pyr, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["family"] = to_string(pyr.spec.family);
  manifest["levels"] = pyr.spec.levels;
  manifest["boundary"] = to_string(pyr.spec.boundary);
  manifest["extents"] = pyr.extents;
  manifest["approx"] = "approx.rngk";
  save_raw(pyr.approx, dir / "approx.rngk");
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t l = 0; l < pyr.details.size(); ++l) {
    const std::string stem = "level" + std::to_string(l + 1) + "_";
    save_raw(pyr.details[l].v, dir / (stem + "V.rngk"));
    save_raw(pyr.details[l].h, dir / (stem + "H.rngk"));
    save_raw(pyr.details[l].d, dir / (stem + "D.rngk"));
    levels.push_back({{"V", stem + "V.rngk"}, {"H", stem + "H.rngk"}, {"D", stem + "D.rngk"}});
  }
  manifest["details"] = levels;
  write_json(manifest, dir / "manifest.json");
}

WaveletPyramid load_pyramid(const std::filesystem::path& dir) {
  const nlohmann::json manifest = read_json(dir / "manifest.json");
  WaveletPyramid pyr;
  try {
    pyr.spec.family = parse_wavelet_family(manifest.at("family").get<std::string>());
    pyr.spec.levels = manifest.at("levels").get<std::size_t>();
    pyr.spec.boundary = parse_boundary(manifest.at("boundary").get<std::string>());
    pyr.extents = manifest.at("extents").get<std::vector<std::array<std::size_t, 2>>>();
    pyr.approx = load_raw(dir / manifest.at("approx").get<std::string>());
    for (const auto& lvl : manifest.at("details")) {
      DetailBands b;
      b.v = load_raw(dir / lvl.at("V").get<std::string>());
      b.h = load_raw(dir / lvl.at("H").get<std::string>());
      b.d = load_raw(dir / lvl.at("D").get<std::string>());
      pyr.details.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw_io(dir.string() + "/manifest.json: " + e.what());
  }
  return pyr;
}

}  // namespace ringkit
