#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ringkit/correct.hpp"
#include "ringkit/net/pipeline.hpp"
#include "ringkit/net/train.hpp"
#include "ringkit/recon.hpp"
#include "ringkit/simulate.hpp"

namespace ringkit::cli {

struct PhantomConfig {
  std::string kind = "ellipse";  // ellipse | disc | head | random
  double cx_mm = 5.0;
  double cy_mm = 2.0;
  double a_mm = 14.0;
  double b_mm = 9.0;
  double rot_rad = 0.5;
  double radius_mm = 18.0;  // disc and head
  double mu = 0.02;         // ellipse/disc attenuation, head peak

  EllipsePhantom build(Rng& rng) const;
};

struct NoiseConfig {
  bool enabled = true;
  double i0 = 1e6;
};

struct ErrorModelConfig {
  double sigma_gain = 0.02;
  double sigma_offset = 0.002;
  double sigma_quad = 0.0;
};

struct CorrectorConfig {
  std::string method = "wff";
  std::string wff_family = "db25";
  std::size_t wff_levels = 4;
  std::string wff_boundary = "symmetric";
  double wff_sigma = 3.0;
  bool wff_all_bands = false;
  double tv_lambda = 3.0;
  std::size_t tv_outer_iters = 20;
  double tv_relax = 0.1;
  double tv_gauss_sigma = 0.5;
  std::size_t tv_iters = 200;
  std::string net_params;  // empty: identity-configured model

  WffConfig wff() const;
  MpTvgConfig mp_tvg() const;
  PolarTvConfig polar_tv() const;
};

struct ReconSection {
  std::size_t out_size = 512;
  double pixel_size_mm = 0.0;
  std::string filter = "hamming";
  std::size_t pad_factor = 8;

  ReconConfig build() const;
};

struct NetworkSection {
  std::size_t levels = 2;
  std::size_t channels = 8;
  std::size_t token_grid = 16;
  bool use_glfig = true;
  std::size_t steps = 300;
  double lr = 0.003;
  std::size_t tiles = 32;
  std::size_t tile = 64;
  std::size_t phantoms = 4;

  net::PipelineConfig pipeline() const;
};

struct MetricsSection {
  double mu_water = 0.02;
  double data_range = 0.0;  // 0: max(ref) - min(ref)
  std::size_t coupling_row = 0;  // 0: central detector
  std::string coupling_family = "db25";
  std::size_t coupling_levels = 1;
  std::string coupling_boundary = "symmetric";
  double coupling_sigma_gain = 0.02;
  double coupling_sigma_offset = 0.002;
  // Outer radius of the polar grid used for ring_energy in reports; 0 uses the inscribed circle.
  double ring_radius_mm = 18.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "ringkit_out";
  std::size_t threads = 0;  // 0: all available cores
  FanBeamGeometry geometry = FanBeamGeometry::desk_scale();
  PhantomConfig phantom;
  NoiseConfig noise;
  ErrorModelConfig error_model;
  CorrectorConfig corrector;
  ReconSection recon;
  NetworkSection network;
  MetricsSection metrics;

  // Throws a config error naming the offending key.
  void validate() const;
  net::ToyDataConfig toy_data() const;
};

// Flat TOML subset: [section] headers, key = value lines, # comments; values are double-quoted
// strings, integers, floats or true/false. Unknown sections or keys, duplicates and type
// mismatches are config errors that name the key path. Keys not present keep `base` values.
ExperimentConfig parse_config(const std::string& text, const std::string& origin,
                              ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
std::string to_toml(const ExperimentConfig& cfg);

const std::vector<std::string>& commands();
const std::vector<std::string>& correction_methods();

struct Invocation {
  std::string command;
  ExperimentConfig config;
  std::string input;      // sinogram or image file; empty: simulate from the config
  std::string reference;  // clean reference for reports
  bool dump_config = false;
};

// Executes one subcommand, writing artifacts plus resolved_config.toml into config.output_dir.
// Returns the process exit code: 0 ok, 2 config, 3 numeric, 4 I/O.
int run(const Invocation& inv, std::ostream& out, std::ostream& err);

// Full command-line entry point (flag parsing, RINGKIT_OUT override, error mapping).
int main_entry(int argc, char** argv);

}  // namespace ringkit::cli
