#include "ringkit/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ringkit/error.hpp"

namespace ringkit {
namespace {

constexpr std::array<char, 8> kMagic = {'R', 'N', 'G', 'K', '0', '0', '0', '1'};

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

void write_bytes(const std::vector<char>& bytes, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw_io("cannot open " + path.string() + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw_io("write failed: " + path.string());
}

}  // namespace

void save_raw(const Tensor& tensor, const std::filesystem::path& path,
              const nlohmann::json& metadata) {
  if (tensor.rank() == 0) throw_invalid("save_raw: zero-dimensional tensor");
  for (auto d : tensor.dims()) {
    if (d > (std::size_t{1} << 31)) throw_invalid("save_raw: extent exceeds 2^31");
  }
  std::vector<char> bytes;
  bytes.reserve(12 + 4 * tensor.rank() + 4 * tensor.size());
  bytes.insert(bytes.end(), kMagic.begin(), kMagic.end());
  put_u32(bytes, static_cast<std::uint32_t>(tensor.rank()));
  for (auto d : tensor.dims()) put_u32(bytes, static_cast<std::uint32_t>(d));
  for (double v : tensor.values()) {
    put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  write_bytes(bytes, path);

  nlohmann::json side;
  side["dims"] = tensor.dims();
  side["dtype"] = "f32";
  side["metadata"] = metadata;
  write_json(side, sidecar_path(path));
}

Tensor load_raw(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_io("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12) throw_io(path.string() + ": truncated header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw_io(path.string() + ": bad magic");
  }
  const std::uint32_t rank = get_u32(&bytes[8]);
  const std::size_t header = 12 + 4 * std::size_t{rank};
  if (rank == 0) throw_io(path.string() + ": zero-dimensional tensor");
  if (bytes.size() < header) throw_io(path.string() + ": truncated header");
  Dims dims(rank);
  for (std::uint32_t i = 0; i < rank; ++i) dims[i] = get_u32(&bytes[12 + 4 * i]);
  const std::size_t n = dims_product(dims);
  const std::size_t expected = header + 4 * n;
  if (bytes.size() < expected) throw_io(path.string() + ": truncated payload");
  if (bytes.size() > expected) throw_io(path.string() + ": dims/payload size mismatch");
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = static_cast<double>(std::bit_cast<float>(get_u32(&bytes[header + 4 * i])));
  }
  return Tensor(std::move(dims), std::move(data));
}

nlohmann::json load_sidecar(const std::filesystem::path& path) {
  return read_json(sidecar_path(path));
}

std::uint16_t pgm_sample(double v, double lo, double hi) {
  const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  return static_cast<std::uint16_t>(std::floor(t * 65535.0 + 0.5));
}

void save_pgm(const Image2D& image, double lo, double hi, const std::filesystem::path& path) {
  if (!(hi > lo)) throw_invalid("save_pgm: window_hi must exceed window_lo");
  const std::string header = "P5\n" + std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + "\n65535\n";
  std::vector<char> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + 2 * image.pixels.size());
  for (double v : image.pixels.values()) {
    const std::uint16_t s = pgm_sample(v, lo, hi);
    bytes.push_back(static_cast<char>(s >> 8));
    bytes.push_back(static_cast<char>(s & 0xFF));
  }
  write_bytes(bytes, path);
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  write_text(j.dump(2) + "\n", path);
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw_io("cannot open " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw_io(path.string() + ": " + e.what());
  }
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  write_bytes(std::vector<char>(text.begin(), text.end()), path);
}

}  // namespace ringkit
