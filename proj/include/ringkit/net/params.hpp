#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ringkit/net/autodiff.hpp"
#include "ringkit/rng.hpp"

namespace ringkit::net {

// Named, ordered collection of trainable tensors. Registration order is the serialization and
// update order, so two stores built from the same seed and config are identical.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed), rng_(seed) {}

  // Throws when the name is already taken.
  Var add(const std::string& name, Tensor init);
  // Uniform(-bound, bound) with bound = gain * sqrt(3 / fan_in).
  Var add_uniform(const std::string& name, Dims dims, std::size_t fan_in, double gain = 1.0);
  Var add_constant(const std::string& name, Dims dims, double value);

  const Var& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
  std::vector<Var> vars() const;
  std::size_t scalar_count() const;
  std::uint64_t seed() const { return seed_; }
  Rng& rng() { return rng_; }

  // One RNGK0001 file per tensor plus manifest.json {seed, params: [{name, file, dims}], extra}.
  void save(const std::filesystem::path& dir, const nlohmann::json& extra = nlohmann::json::object()) const;
  // Overwrites values of every registered tensor from a saved directory; names and dims must match.
  void load(const std::filesystem::path& dir);
  static nlohmann::json read_manifest(const std::filesystem::path& dir);

 private:
  std::uint64_t seed_;
  Rng rng_;
  std::vector<std::pair<std::string, Var>> entries_;
};

}  // namespace ringkit::net
