#include "ringkit/net/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ringkit/error.hpp"

namespace ringkit::net {

void ToyDataConfig::validate() const {
  geometry.validate();
  if (tiles < 1) throw_config("training.tiles must be >= 1");
  if (phantoms < 1) throw_config("training.phantoms must be >= 1");
  if (tile < 4 || tile > geometry.n_angles || tile > geometry.n_det) {
    throw_config("training.tile must fit inside the sinogram");
  }
  if (!(sigma_gain >= 0.0)) throw_config("training.sigma_gain must be >= 0");
  if (!(i0 > 0.0)) throw_config("training.i0 must be positive");
}

EllipsePhantom random_phantom(Rng& rng) {
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  EllipsePhantom p;
  const double a = uni(10.0, 16.0), b = uni(0.6, 1.0) * a;
  const double cx = uni(-3.0, 3.0), cy = uni(-3.0, 3.0), rot = uni(0.0, std::numbers::pi);
  p.ellipses.push_back({cx, cy, a, b, rot, uni(0.015, 0.025)});
  const int inner = 2 + static_cast<int>(rng.uniform() * 3.0);
  const double c = std::cos(rot), s = std::sin(rot);
  for (int k = 0; k < inner; ++k) {
    // Position in the body's own frame, at most half way to its boundary.
    const double t = uni(0.0, 2.0 * std::numbers::pi), rho = uni(0.0, 0.5);
    const double u = rho * a * std::cos(t), v = rho * b * std::sin(t);
    const double r = uni(1.0, 0.3 * b);
    p.ellipses.push_back({cx + u * c - v * s, cy + u * s + v * c, r, uni(0.5, 1.0) * r, uni(0.0, std::numbers::pi),
                          uni(-0.008, 0.01)});
  }
  return p;
}

ToyScan make_toy_scan(const ToyDataConfig& cfg, Rng& rng) {
  const EllipsePhantom phantom = random_phantom(rng);
  const Sinogram ideal = project_analytic(phantom, cfg.geometry);
  ToyScan scan;
  scan.clean = add_poisson_noise(ideal, cfg.i0, rng);
  const DetectorErrorModel model = sample_error_model(cfg.geometry.n_det, cfg.sigma_gain, 0.0, 0.0, rng);
  scan.corrupted = apply_error_model(scan.clean, model);
  return scan;
}

ToyDataset make_toy_dataset(const ToyDataConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ToyDataset ds{Tensor({cfg.tiles, 1, cfg.tile, cfg.tile}), Tensor({cfg.tiles, 1, cfg.tile, cfg.tile})};
  std::vector<ToyScan> scans;
  for (std::size_t p = 0; p < cfg.phantoms; ++p) scans.push_back(make_toy_scan(cfg, rng));
  // Columns stay within a quarter tile of the detector center, where every phantom casts a shadow.
  const std::size_t max_r = cfg.geometry.n_angles - cfg.tile;
  const std::size_t center = (cfg.geometry.n_det - cfg.tile) / 2, spread = cfg.tile / 4;
  const std::size_t lo_c = center > spread ? center - spread : 0;
  const std::size_t hi_c = std::min(center + spread, cfg.geometry.n_det - cfg.tile);
  for (std::size_t k = 0; k < cfg.tiles; ++k) {
    const ToyScan& scan = scans[k % scans.size()];
    const auto r0 = static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_r + 1));
    const auto c0 = lo_c + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi_c - lo_c + 1));
    for (std::size_t y = 0; y < cfg.tile; ++y) {
      for (std::size_t x = 0; x < cfg.tile; ++x) {
        ds.corrupted.at4(k, 0, y, x) = scan.corrupted(r0 + y, c0 + x);
        ds.clean.at4(k, 0, y, x) = scan.clean(r0 + y, c0 + x);
      }
    }
  }
  return ds;
}

TrainResult train_toy(Pipeline& model, const ToyDataset& data, const TrainOptions& opts) {
  require(!data.corrupted.empty() && data.corrupted.dims() == data.clean.dims(),
          "train_toy: dataset empty or input/target dims differ");
  require(opts.lr >= 0.0, "train_toy: lr must be >= 0");
  const Var input = constant(data.corrupted);
  const Var target = constant(data.clean);
  const std::vector<Var> params = model.params().vars();

  TrainResult r;
  double lr = opts.lr;
  for (std::size_t step = 0; step < opts.steps; ++step) {
    zero_grad(params);
    const Var loss = l1_loss(model.forward(input), target);
    const double value = loss->value[0];
    if (!std::isfinite(value)) throw_numeric("train_toy: loss is not finite at step " + std::to_string(step));
    if (!r.loss.empty() && value > opts.divergence_factor * r.loss.front()) {
      throw_numeric("train_toy: diverged at step " + std::to_string(step) + " (loss " + std::to_string(value) +
                    " > " + std::to_string(opts.divergence_factor) + " x initial)");
    }
    if (!r.loss.empty() && value > r.loss.back()) lr *= 0.5;
    r.loss.push_back(value);
    r.lr.push_back(lr);
    backward(loss);
    for (const auto& p : params) {
      if (p->grad.empty()) continue;
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr * p->grad[i];
    }
  }
  return r;
}

std::string loss_csv(const TrainResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "step,loss,lr\n";
  for (std::size_t i = 0; i < r.loss.size(); ++i) os << i << ',' << r.loss[i] << ',' << r.lr[i] << '\n';
  return os.str();
}

}  // namespace ringkit::net
