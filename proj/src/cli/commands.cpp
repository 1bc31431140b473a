#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ringkit/cli.hpp"
#include "ringkit/correct.hpp"
#include "ringkit/error.hpp"
#include "ringkit/io.hpp"
#include "ringkit/metrics.hpp"
#include "ringkit/net/pipeline.hpp"
#include "ringkit/net/train.hpp"
#include "ringkit/parallel.hpp"
#include "ringkit/recon.hpp"

namespace ringkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Independent random stream per experiment stage.
enum class Stream : std::uint64_t { kPhantom = 1, kNoise, kErrorModel, kCouplingGain,
                                    kCouplingOffset, kHeldOut };

Rng stream(std::uint64_t seed, Stream s) {
  Rng mix(seed ^ (static_cast<std::uint64_t>(s) * 0xD1B54A32D192ED03ULL));
  return Rng(mix.next_u64());
}

void check_finite(const Tensor& t, const std::string& what) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) throw_numeric(what + ": non-finite value detected");
  }
}

json sinogram_meta(const ExperimentConfig& cfg, const FanBeamGeometry& g, const std::string& stage) {
  return json{{"kind", "sinogram"}, {"stage", stage}, {"seed", cfg.seed}, {"geometry", g}};
}

json image_meta(const ExperimentConfig& cfg, const Image2D& img, const std::string& stage) {
  return json{{"kind", "image"}, {"stage", stage}, {"seed", cfg.seed},
              {"pixel_size_mm", img.pixel_size_mm}};
}

void save_sinogram(const ExperimentConfig& cfg, const Sinogram& s, const fs::path& path,
                   const std::string& stage) {
  check_finite(s.data, stage);
  save_raw(s.data, path, sinogram_meta(cfg, s.geometry, stage));
}

void save_image(const ExperimentConfig& cfg, const Image2D& img, const fs::path& path,
                const std::string& stage) {
  check_finite(img.pixels, stage);
  save_raw(img.pixels, path, image_meta(cfg, img, stage));
}

// A loaded data file: either a sinogram (with its geometry) or an image.
struct Loaded {
  std::optional<Sinogram> sino;
  std::optional<Image2D> image;
};

Loaded load_data(const std::string& path) {
  Tensor t = load_raw(path);
  const json side = load_sidecar(path);
  const json meta = side.value("metadata", json::object());
  const std::string kind = meta.value("kind", "");
  Loaded out;
  if (kind == "sinogram") {
    require(meta.contains("geometry"), path + ": sinogram sidecar has no geometry");
    const auto g = meta.at("geometry").get<FanBeamGeometry>();
    require(t.rank() == 2 && t.dim(0) == g.n_angles && t.dim(1) == g.n_det,
            path + ": sinogram dims " + dims_to_string(t.dims()) + " do not match its geometry");
    out.sino = Sinogram(g, std::move(t));
  } else if (kind == "image") {
    require(t.rank() == 2, path + ": image must be 2-D");
    out.image = Image2D(std::move(t), meta.value("pixel_size_mm", 1.0));
  } else {
    throw_invalid(path + ": sidecar kind must be 'sinogram' or 'image'");
  }
  return out;
}

Sinogram load_sinogram(const std::string& path) {
  auto d = load_data(path);
  require(d.sino.has_value(), path + ": expected a sinogram");
  return std::move(*d.sino);
}

struct Scenario {
  EllipsePhantom phantom;
  Sinogram clean;      // noise-free projections
  Sinogram noisy;      // after transmission noise; the correction reference
  DetectorErrorModel model;
  Sinogram corrupted;  // noisy after the detector error model
};

Sinogram add_noise(const ExperimentConfig& cfg, const Sinogram& clean) {
  if (!cfg.noise.enabled) return clean;
  Rng rng = stream(cfg.seed, Stream::kNoise);
  return add_poisson_noise(clean, cfg.noise.i0, rng);
}

DetectorErrorModel sample_model(const ExperimentConfig& cfg, std::size_t n_det) {
  Rng rng = stream(cfg.seed, Stream::kErrorModel);
  const auto& e = cfg.error_model;
  return sample_error_model(n_det, e.sigma_gain, e.sigma_offset, e.sigma_quad, rng);
}

Scenario simulate_scenario(const ExperimentConfig& cfg) {
  Scenario s;
  Rng prng = stream(cfg.seed, Stream::kPhantom);
  s.phantom = cfg.phantom.build(prng);
  s.clean = project_analytic(s.phantom, cfg.geometry);
  s.noisy = add_noise(cfg, s.clean);
  s.model = sample_model(cfg, cfg.geometry.n_det);
  s.corrupted = apply_error_model(s.noisy, s.model);
  return s;
}

double report_ring_energy(const ExperimentConfig& cfg, const Image2D& img) {
  auto grid = PolarGrid::centered(img, 0, 4 * img.width());
  if (cfg.metrics.ring_radius_mm > 0) grid.r_max_mm = std::min(grid.r_max_mm, cfg.metrics.ring_radius_mm);
  grid.n_r = static_cast<std::size_t>(grid.r_max_mm / img.pixel_size_mm) + 1;
  return ring_energy(img, grid);
}

Image2D reconstruct(const ExperimentConfig& cfg, const Sinogram& s) {
  Image2D img = fbp(s, cfg.recon.build());
  check_finite(img.pixels, "reconstruction");
  return img;
}

Image2D as_image(const ExperimentConfig& cfg, const Loaded& d) {
  return d.image ? *d.image : reconstruct(cfg, *d.sino);
}

void save_view(const ExperimentConfig& cfg, const Image2D& img, const fs::path& path) {
  save_pgm(img, 0.0, 1.5 * cfg.metrics.mu_water, path);
}

std::optional<double> image_mu_water(const ExperimentConfig& cfg, bool image_domain) {
  return image_domain ? std::optional<double>(cfg.metrics.mu_water) : std::nullopt;
}

void write_resolved(const ExperimentConfig& cfg, const fs::path& dir) {
  write_text(to_toml(cfg), dir / "resolved_config.toml");
}

json describe_method(const std::string& method) {
  if (method == "polartv_lite") return "polar-tv-lite (column-mean TV in polar coordinates)";
  if (method == "net") return std::string("net (wavelet pipeline, ") + net::kGlobalBlockVariant + ")";
  return method;
}

// ---- commands ----

int cmd_simulate(const Invocation& inv, const fs::path& dir, std::ostream& out) {
  const auto& cfg = inv.config;
  const Scenario s = simulate_scenario(cfg);
  save_sinogram(cfg, s.clean, dir / "clean.rngk", "clean");
  save_sinogram(cfg, s.noisy, dir / "noisy.rngk", "noisy");
  save_sinogram(cfg, s.corrupted, dir / "corrupted.rngk", "corrupted");
  write_json(json(s.model), dir / "error_model.json");
  write_json(json{{"ellipses", s.phantom.ellipses}}, dir / "phantom.json");
  out << "simulate: " << dims_to_string(s.clean.data.dims()) << " sinograms written to "
      << dir.string() << "\n";
  return 0;
}

int cmd_corrupt(const Invocation& inv, const fs::path& dir, std::ostream& out) {
  const auto& cfg = inv.config;
  Sinogram base = inv.input.empty() ? add_noise(cfg, simulate_scenario(cfg).clean)
                                    : load_sinogram(inv.input);
  const auto model = sample_model(cfg, base.n_det());
  const Sinogram corrupted = apply_error_model(base, model);
  save_sinogram(cfg, corrupted, dir / "corrupted.rngk", "corrupted");
  write_json(json(model), dir / "error_model.json");
  out << "corrupt: sigma_gain=" << cfg.error_model.sigma_gain
      << " sigma_offset=" << cfg.error_model.sigma_offset << " -> " << (dir / "corrupted.rngk").string()
      << "\n";
  return 0;
}

net::Pipeline net_model(const ExperimentConfig& cfg) {
  if (!cfg.corrector.net_params.empty()) return net::Pipeline::load(cfg.corrector.net_params);
  return net::Pipeline(cfg.network.pipeline(), cfg.seed, net::BlockInit::kIdentity);
}

int cmd_correct(const Invocation& inv, const fs::path& dir, std::ostream& out) {
  const auto& cfg = inv.config;
  const std::string& method = cfg.corrector.method;

  Loaded input, reference;
  bool have_reference = true;
  if (inv.input.empty()) {
    const Scenario s = simulate_scenario(cfg);
    input.sino = s.corrupted;
    reference.sino = s.noisy;
  } else {
    input = load_data(inv.input);
    if (inv.reference.empty()) {
      have_reference = false;
    } else {
      reference = load_data(inv.reference);
    }
  }

  json report{{"method", method}, {"description", describe_method(method)}};
  std::string csv = metric_csv_header();
  const fs::path out_path = dir / ("corrected_" + method + ".rngk");

  if (method == "polartv_lite") {
    const Image2D in_img = as_image(cfg, input);
    const Image2D corrected = polar_tv_lite(in_img, cfg.corrector.polar_tv());
    save_image(cfg, corrected, out_path, "corrected");
    save_view(cfg, corrected, dir / ("corrected_" + method + ".pgm"));
    report["domain"] = "image";
    report["ring_energy_in"] = report_ring_energy(cfg, in_img);
    report["ring_energy_out"] = report_ring_energy(cfg, corrected);
    if (have_reference) {
      const Image2D ref = as_image(cfg, reference);
      require(ref.pixels.dims() == in_img.pixels.dims(), "correct: reference dims differ from input");
      const auto mu = image_mu_water(cfg, true);
      const auto rin = evaluate(in_img.pixels, ref.pixels, cfg.metrics.data_range, mu);
      const auto rout = evaluate(corrected.pixels, ref.pixels, cfg.metrics.data_range, mu);
      report["input"] = rin;
      report["output"] = rout;
      report["psnr_in"] = rin.psnr_db;
      report["psnr_out"] = rout.psnr_db;
      csv += to_csv_row("input", rin) + to_csv_row("polartv_lite", rout);
    }
  } else {
    require(input.sino.has_value(), "correct: method " + method + " needs a sinogram input");
    const Sinogram& in = *input.sino;
    Sinogram corrected;
    if (method == "wff") {
      corrected = wff(in, cfg.corrector.wff());
    } else if (method == "mptvg") {
      corrected = mp_tvg(in, cfg.corrector.mp_tvg());
    } else {
      const auto model = net_model(cfg);
      corrected = Sinogram(in.geometry, model.correct(in.data));
    }
    save_sinogram(cfg, corrected, out_path, "corrected");
    report["domain"] = "sinogram";
    const Image2D in_img = reconstruct(cfg, in);
    const Image2D out_img = reconstruct(cfg, corrected);
    save_view(cfg, out_img, dir / ("corrected_" + method + ".pgm"));
    report["ring_energy_in"] = report_ring_energy(cfg, in_img);
    report["ring_energy_out"] = report_ring_energy(cfg, out_img);
    if (have_reference) {
      require(reference.sino.has_value(), "correct: reference must be a sinogram");
      const Tensor& ref = reference.sino->data;
      require(ref.dims() == in.data.dims(), "correct: reference dims differ from input");
      const auto rin = evaluate(in.data, ref, cfg.metrics.data_range);
      const auto rout = evaluate(corrected.data, ref, cfg.metrics.data_range);
      report["input"] = rin;
      report["output"] = rout;
      report["psnr_in"] = rin.psnr_db;
      report["psnr_out"] = rout.psnr_db;
      csv += to_csv_row("input", rin) + to_csv_row(method, rout);
    }
  }
  write_json(report, dir / "report.json");
  write_text(csv, dir / "report.csv");
  out << "correct[" << method << "]: ring_energy " << report["ring_energy_in"].get<double>()
      << " -> " << report["ring_energy_out"].get<double>();
  if (have_reference) {
    out << ", psnr " << report["psnr_in"].get<double>() << " -> " << report["psnr_out"].get<double>()
        << " dB";
  }
  out << "\n";
  return 0;
}

int cmd_reconstruct(const Invocation& inv, const fs::path& dir, std::ostream& out) {
  const auto& cfg = inv.config;
  json summary = json::object();
  auto emit = [&](const Sinogram& s, const std::string& name) {
    const Image2D img = reconstruct(cfg, s);
    save_image(cfg, img, dir / (name + ".rngk"), name);
    save_view(cfg, img, dir / (name + ".pgm"));
    summary[name] = {{"ring_energy", report_ring_energy(cfg, img)},
                     {"pixel_size_mm", img.pixel_size_mm}};
  };
  if (inv.input.empty()) {
    const Scenario s = simulate_scenario(cfg);
    emit(s.corrupted, "image");
    emit(s.noisy, "reference");
  } else {
    emit(load_sinogram(inv.input), "image");
  }
  write_json(summary, dir / "ring_energy.json");
  out << "reconstruct: ring_energy " << summary["image"]["ring_energy"].get<double>() << "\n";
  return 0;
}

int cmd_metrics(const Invocation& inv, const fs::path& dir, std::ostream& out) {
  const auto& cfg = inv.config;
  Tensor x, ref;
  bool image_domain = false;
  if (inv.input.empty()) {
    require(inv.reference.empty(), "metrics: --reference needs --input");
    const Scenario s = simulate_scenario(cfg);
    x = s.corrupted.data;
    ref = s.noisy.data;
  } else {
    require(!inv.reference.empty(), "metrics: --input needs --reference");
    const Loaded a = load_data(inv.input);
    const Loaded b = load_data(inv.reference);
    image_domain = a.image.has_value() && b.image.has_value();
    x = a.sino ? a.sino->data : a.image->pixels;
    ref = b.sino ? b.sino->data : b.image->pixels;
  }
  require(x.dims() == ref.dims(), "metrics: dims " + dims_to_string(x.dims()) + " vs " +
                                      dims_to_string(ref.dims()));
  const auto r = evaluate(x, ref, cfg.metrics.data_range, image_mu_water(cfg, image_domain));
  write_json(json(r), dir / "metrics.json");
  write_text(metric_csv_header() + to_csv_row("input", r), dir / "metrics.csv");
  out << "metrics: psnr " << r.psnr_db << " dB, ssim " << r.ssim << ", rmse " << r.rmse << "\n";
  return 0;
}

int cmd_analyze_coupling(const Invocation& inv, const fs::path& dir, std::ostream& out) {
  const auto& cfg = inv.config;
  const auto& m = cfg.metrics;
  const Sinogram clean = inv.input.empty() ? simulate_scenario(cfg).clean : load_sinogram(inv.input);
  const WaveletSpec spec{parse_wavelet_family(m.coupling_family), m.coupling_levels,
                         parse_boundary(m.coupling_boundary)};
  const std::size_t row = m.coupling_row == 0 ? clean.n_det() / 2 : m.coupling_row;
  require(row < clean.n_det(), "analyze-coupling: coupling_row outside the detector");

  Rng rg = stream(cfg.seed, Stream::kCouplingGain);
  Rng ro = stream(cfg.seed, Stream::kCouplingOffset);
  const auto gain = apply_error_model(clean, sample_error_model(clean.n_det(), m.coupling_sigma_gain, 0, 0, rg));
  const auto offset =
      apply_error_model(clean, sample_error_model(clean.n_det(), 0, m.coupling_sigma_offset, 0, ro));
  const auto pg = coupling_profile(gain, spec, row);
  const auto po = coupling_profile(offset, spec, row);
  write_text(to_csv(pg), dir / "coupling_gain.csv");
  write_text(to_csv(po), dir / "coupling_offset.csv");
  auto entry = [](const CouplingProfile& p) {
    return json{{"pearson_r", p.pearson_r}, {"pearson_r_full", p.pearson_r_full},
                {"support", p.support}};
  };
  write_json(json{{"row", row}, {"gain_only", entry(pg)}, {"offset_only", entry(po)}},
             dir / "coupling.json");
  out << "analyze-coupling: detector " << row << ", gain-only r = " << pg.pearson_r
      << ", offset-only r = " << po.pearson_r << "\n";
  return 0;
}

int cmd_train_toy(const Invocation& inv, const fs::path& dir, std::ostream& out) {
  const auto& cfg = inv.config;
  const auto t0 = std::chrono::steady_clock::now();
  const auto data_cfg = cfg.toy_data();
  const auto data = net::make_toy_dataset(data_cfg, cfg.seed);
  net::Pipeline model(cfg.network.pipeline(), cfg.seed);
  net::TrainOptions opts;
  opts.steps = cfg.network.steps;
  opts.lr = cfg.network.lr;
  const auto result = net::train_toy(model, data, opts);
  write_text(net::loss_csv(result), dir / "loss.csv");
  model.save(dir / "model");

  Rng held = stream(cfg.seed, Stream::kHeldOut);
  const auto scan = net::make_toy_scan(data_cfg, held);
  const Sinogram corrected(scan.corrupted.geometry, model.correct(scan.corrupted.data));
  check_finite(corrected.data, "train-toy held-out correction");
  const double re_clean = report_ring_energy(cfg, reconstruct(cfg, scan.clean));
  const double re_in = report_ring_energy(cfg, reconstruct(cfg, scan.corrupted));
  const double re_out = report_ring_energy(cfg, reconstruct(cfg, corrected));

  const double first = result.loss.front();
  const double last = result.loss.back();
  write_json(json{{"steps", result.loss.size()},
                  {"initial_loss", first},
                  {"final_loss", last},
                  {"loss_ratio", last / first},
                  {"use_glfig", cfg.network.use_glfig},
                  {"global_block", net::kGlobalBlockVariant},
                  {"held_out_ring_energy",
                   {{"clean", re_clean}, {"uncorrected", re_in}, {"corrected", re_out}}}},
             dir / "summary.json");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << "train-toy: loss " << first << " -> " << last << " (ratio " << last / first
      << "), held-out ring_energy " << re_in << " -> " << re_out << ", " << secs << " s\n";
  return 0;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidArgument: return 2;
    case ErrorKind::kNumeric: return 3;
    case ErrorKind::kIo: return 4;
  }
  return 1;
}

}  // namespace

int run(const Invocation& inv, std::ostream& out, std::ostream& err) {
  try {
    const auto& cmds = commands();
    if (std::find(cmds.begin(), cmds.end(), inv.command) == cmds.end()) {
      throw_config("unknown command '" + inv.command + "'");
    }
    inv.config.validate();
    if (inv.dump_config) {
      out << to_toml(inv.config);
      return 0;
    }
    set_thread_count(inv.config.threads);
    const fs::path dir = inv.config.output_dir;
    fs::create_directories(dir);
    write_resolved(inv.config, dir);

    if (inv.command == "simulate") return cmd_simulate(inv, dir, out);
    if (inv.command == "corrupt") return cmd_corrupt(inv, dir, out);
    if (inv.command == "correct") return cmd_correct(inv, dir, out);
    if (inv.command == "reconstruct") return cmd_reconstruct(inv, dir, out);
    if (inv.command == "metrics") return cmd_metrics(inv, dir, out);
    if (inv.command == "analyze-coupling") return cmd_analyze_coupling(inv, dir, out);
    return cmd_train_toy(inv, dir, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return 4;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"ringkit: ring artifact simulation, correction and evaluation"};
  app.require_subcommand(1);

  std::string config_path, method, params;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool dump = false, all_bands = false, no_glfig = false;
  Invocation inv;

  for (const auto& name : commands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config file (TOML subset)");
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads, 0 = all cores");
    sub->add_flag("--dump-config", dump, "print the resolved config and exit");
    sub->add_flag("--wff-all-bands", all_bands, "damp H and D bands in WFF as well as V");
    sub->add_flag("--no-glfig", no_glfig, "disable the global-local interaction block");
    sub->add_option("--input", inv.input, "input .rngk file instead of simulating");
    sub->add_option("--reference", inv.reference, "reference .rngk file for reports");
    if (name == "correct") {
      sub->add_option("--method", method, "wff | mptvg | polartv_lite | net");
      sub->add_option("--params", params, "trained model directory for method net");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  inv.command = app.get_subcommands().front()->get_name();
  inv.dump_config = dump;
  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path, cfg);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (all_bands) cfg.corrector.wff_all_bands = true;
    if (no_glfig) cfg.network.use_glfig = false;
    if (!method.empty()) cfg.corrector.method = method;
    if (!params.empty()) cfg.corrector.net_params = params;
    if (const char* env = std::getenv("RINGKIT_OUT"); env && *env) cfg.output_dir = env;
    inv.config = std::move(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  }
  return run(inv, std::cout, std::cerr);
}

}  // namespace ringkit::cli
