#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ringkit/net/pipeline.hpp"
#include "ringkit/simulate.hpp"

namespace ringkit::net {

// Paired stripe-corruption tiles cut from desk-geometry sinograms of random ellipse phantoms.
struct ToyDataConfig {
  std::size_t tiles = 32;
  std::size_t tile = 64;
  std::size_t phantoms = 4;
  double sigma_gain = 0.02;
  double i0 = 1e6;
  FanBeamGeometry geometry = FanBeamGeometry::desk_scale();

  void validate() const;
};

struct ToyDataset {
  Tensor corrupted;  // [N, 1, tile, tile]
  Tensor clean;      // same dims: the noisy sinogram before the detector error model
};

// A body ellipse (radius 10-16 mm) with 2-4 inner features, all inside the desk field of view.
EllipsePhantom random_phantom(Rng& rng);

struct ToyScan {
  Sinogram clean;      // noisy, no detector error
  Sinogram corrupted;  // after the sampled gain model
};
ToyScan make_toy_scan(const ToyDataConfig& cfg, Rng& rng);
ToyDataset make_toy_dataset(const ToyDataConfig& cfg, std::uint64_t seed);

struct TrainOptions {
  std::size_t steps = 300;
  double lr = 0.003;
  double divergence_factor = 10.0;
};

struct TrainResult {
  std::vector<double> loss;  // L1 loss before the update of each step
  std::vector<double> lr;    // step size used at each step
};

// Full-batch gradient descent on the L1 loss. The step size halves after every step whose loss
// exceeds the previous one; a loss above divergence_factor x the initial loss aborts with a
// numeric error.
TrainResult train_toy(Pipeline& model, const ToyDataset& data, const TrainOptions& opts);

std::string loss_csv(const TrainResult& r);

}  // namespace ringkit::net
