#pragma once

#include <cstdint>

namespace ringkit {

// SplitMix64 stream. Equal seeds give bit-identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on the open interval (0, 1); 53-bit resolution.
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t state() const noexcept { return state_; }

  // Independent child stream for parallel work item `index`.
  Rng split(std::uint64_t index) const noexcept { return Rng(state_ + index); }

 private:
  std::uint64_t state_;
};

double rng_normal(Rng& rng, double mu, double sigma);
std::int64_t rng_poisson(Rng& rng, double lambda);

}  // namespace ringkit
