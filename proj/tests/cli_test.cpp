#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ringkit/cli.hpp"
#include "ringkit/error.hpp"
#include "ringkit/io.hpp"

using namespace ringkit;
using namespace ringkit::cli;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("ringkit_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

struct RunResult {
  int code;
  std::string out, err;
};

RunResult run_cmd(const std::string& command, ExperimentConfig cfg, const std::string& input = "",
                  const std::string& reference = "", bool dump = false) {
  Invocation inv;
  inv.command = command;
  inv.config = std::move(cfg);
  inv.input = input;
  inv.reference = reference;
  inv.dump_config = dump;
  std::ostringstream out, err;
  const int code = run(inv, out, err);
  return {code, out.str(), err.str()};
}

ExperimentConfig in_dir(const fs::path& dir) {
  ExperimentConfig cfg;
  cfg.output_dir = dir.string();
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "test.toml");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config: parse sections and value types") {
  const auto cfg = parse_config(R"(
seed = 42   # trailing comment
output_dir = "runs/a#b"

[geometry]
n_det = 512
det_spacing_mm = 1e-1

[noise]
enabled = false

[corrector]
method = "mptvg"
tv_lambda = 2
)",
                                "inline");
  CHECK(cfg.seed == 42);
  CHECK(cfg.output_dir == "runs/a#b");
  CHECK(cfg.geometry.n_det == 512);
  CHECK(cfg.geometry.det_spacing_mm == 0.1);
  CHECK(cfg.geometry.n_angles == 180);
  CHECK_FALSE(cfg.noise.enabled);
  CHECK(cfg.corrector.method == "mptvg");
  CHECK(cfg.corrector.tv_lambda == 2.0);
}

TEST_CASE("config: errors name the key path") {
  CHECK(config_error("[noise]\nbogus = 1\n").find("noise.bogus: unknown key") != std::string::npos);
  CHECK(config_error("[nois]\n").find("unknown section [nois]") != std::string::npos);
  CHECK(config_error("seed = 1\nseed = 2\n").find("seed: duplicate key") != std::string::npos);
  CHECK(config_error("[recon]\nout_size = -3\n").find("recon.out_size") != std::string::npos);
  CHECK(config_error("[noise]\ni0 = \"many\"\n").find("noise.i0: expected a number") != std::string::npos);
  CHECK(config_error("[noise]\nenabled = 1\n").find("noise.enabled") != std::string::npos);
  CHECK(config_error("[phantom]\nkind = \"disc\n").find("phantom.kind") != std::string::npos);
  CHECK(config_error("[geometry]\n").empty());
  CHECK(config_error("[geometry]\n[geometry]\n").find("duplicate section") != std::string::npos);
  CHECK(config_error("no equals sign\n").find(":1:") != std::string::npos);
}

TEST_CASE("config: validation errors name the key") {
  ExperimentConfig cfg;
  cfg.corrector.method = "median";
  try {
    cfg.validate();
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
    const std::string what = e.what();
    CHECK(what.find("corrector.method") != std::string::npos);
    for (const auto& m : correction_methods()) CHECK(what.find(m) != std::string::npos);
  }
  cfg = {};
  cfg.recon.filter = "shepp";
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.network.channels = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.metrics.coupling_row = 256;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK_NOTHROW(ExperimentConfig{}.validate());
}

TEST_CASE("config: dump round-trips exactly") {
  ExperimentConfig cfg;
  cfg.seed = 123456789012345ULL;
  cfg.geometry.sdd_mm = 0.1 + 0.2;
  cfg.phantom.kind = "head";
  cfg.corrector.net_params = "dir with \"quotes\"";
  cfg.network.use_glfig = false;
  const std::string text = to_toml(cfg);
  const auto back = parse_config(text, "dump");
  CHECK(to_toml(back) == text);
  CHECK(back.geometry.sdd_mm == cfg.geometry.sdd_mm);
  CHECK(back.seed == cfg.seed);
  CHECK(back.corrector.net_params == cfg.corrector.net_params);
}

TEST_CASE("cli: dump-config prints resolved values without running") {
  Scratch s("dump");
  auto cfg = in_dir(s.dir / "never");
  cfg.seed = 9;
  const auto r = run_cmd("simulate", cfg, "", "", true);
  CHECK(r.code == 0);
  CHECK(r.out.find("seed = 9") != std::string::npos);
  CHECK(r.out.find("[metrics]") != std::string::npos);
  CHECK_FALSE(fs::exists(s.dir / "never"));
}

TEST_CASE("cli: simulate writes the file contract deterministically") {
  Scratch s("simulate");
  REQUIRE(run_cmd("simulate", in_dir(s.dir / "a")).code == 0);
  REQUIRE(run_cmd("simulate", in_dir(s.dir / "b")).code == 0);
  for (const char* f : {"clean.rngk", "noisy.rngk", "corrupted.rngk", "error_model.json", "resolved_config.toml"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(s.dir / "a" / f));
    if (std::string(f) != "resolved_config.toml") CHECK(slurp(s.dir / "a" / f) == slurp(s.dir / "b" / f));
  }
  const Tensor t = load_raw(s.dir / "a" / "corrupted.rngk");
  CHECK(t.dims() == Dims{180, 256});
  const auto side = load_sidecar(s.dir / "a" / "corrupted.rngk");
  CHECK(side["metadata"]["geometry"]["n_det"] == 256);

  auto other = in_dir(s.dir / "c");
  other.seed = 2;
  REQUIRE(run_cmd("simulate", other).code == 0);
  CHECK(slurp(s.dir / "a" / "corrupted.rngk") != slurp(s.dir / "c" / "corrupted.rngk"));
}

TEST_CASE("cli: full-scale geometry simulates at full size") {
  Scratch s("full");
  auto cfg = in_dir(s.dir);
  cfg.geometry = FanBeamGeometry{};
  REQUIRE(run_cmd("simulate", cfg).code == 0);
  CHECK(load_raw(s.dir / "noisy.rngk").dims() == Dims{384, 2048});
}

TEST_CASE("cli: correct reports and identity net") {
  Scratch s("correct");
  auto cfg = in_dir(s.dir / "wff");
  REQUIRE(run_cmd("correct", cfg).code == 0);
  const auto report = read_json(s.dir / "wff" / "report.json");
  CHECK(report["psnr_out"].get<double>() > report["psnr_in"].get<double>());
  CHECK(report["ring_energy_out"].get<double>() < report["ring_energy_in"].get<double>());
  CHECK(fs::exists(s.dir / "wff" / "report.csv"));

  REQUIRE(run_cmd("simulate", in_dir(s.dir / "sim")).code == 0);
  cfg = in_dir(s.dir / "net");
  cfg.corrector.method = "net";
  const std::string input = (s.dir / "sim" / "corrupted.rngk").string();
  REQUIRE(run_cmd("correct", cfg, input).code == 0);
  const Tensor in = load_raw(input);
  const Tensor out = load_raw(s.dir / "net" / "corrected_net.rngk");
  CHECK(relative_l2(out, in) < 1e-6);

  cfg = in_dir(s.dir / "polar");
  cfg.corrector.method = "polartv_lite";
  REQUIRE(run_cmd("correct", cfg, input, (s.dir / "sim" / "noisy.rngk").string()).code == 0);
  CHECK(read_json(s.dir / "polar" / "report.json")["domain"] == "image");
}

TEST_CASE("cli: metrics on identical files and coupling CSV layout") {
  Scratch s("metrics");
  REQUIRE(run_cmd("simulate", in_dir(s.dir / "sim")).code == 0);
  const std::string f = (s.dir / "sim" / "noisy.rngk").string();
  REQUIRE(run_cmd("metrics", in_dir(s.dir / "m"), f, f).code == 0);
  const auto m = read_json(s.dir / "m" / "metrics.json");
  CHECK(m["psnr_db"].get<double>() == 300.0);
  CHECK(m["ssim"].get<double>() == 1.0);

  REQUIRE(run_cmd("analyze-coupling", in_dir(s.dir / "c")).code == 0);
  const std::string csv = slurp(s.dir / "c" / "coupling_gain.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 181);
  CHECK(csv.substr(0, csv.find('\n')).find("p_local") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.begin() + csv.find('\n'), ',') == 3);
  const auto j = read_json(s.dir / "c" / "coupling.json");
  CHECK(j["gain_only"]["pearson_r"].get<double>() > 0.5);
  CHECK(std::abs(j["offset_only"]["pearson_r"].get<double>()) < 0.2);
}

TEST_CASE("cli: exit codes") {
  Scratch s("codes");
  auto cfg = in_dir(s.dir);
  cfg.corrector.method = "median";
  auto r = run_cmd("correct", cfg);
  CHECK(r.code == 2);
  CHECK(r.err.find("wff, mptvg, polartv_lite, net") != std::string::npos);

  r = run_cmd("reconstruct", in_dir(s.dir), (s.dir / "missing.rngk").string());
  CHECK(r.code == 4);

  std::ofstream(s.dir / "bad.rngk") << "not a tensor";
  r = run_cmd("reconstruct", in_dir(s.dir / "o"), (s.dir / "bad.rngk").string());
  CHECK(r.code == 4);

  r = run_cmd("explode", in_dir(s.dir));
  CHECK(r.code == 2);

  cfg = in_dir(s.dir / "t");
  cfg.network.steps = 3;
  cfg.network.tiles = 2;
  cfg.network.lr = 1e6;
  r = run_cmd("train-toy", cfg);
  CHECK(r.code == 3);
}

TEST_CASE("cli: train-toy writes loss curve, model and summary") {
  Scratch s("train");
  auto cfg = in_dir(s.dir);
  cfg.network.steps = 3;
  cfg.network.tiles = 2;
  REQUIRE(run_cmd("train-toy", cfg).code == 0);
  const std::string csv = slurp(s.dir / "loss.csv");
  CHECK(csv.rfind("step,loss,lr\n0,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(fs::exists(s.dir / "model" / "manifest.json"));
  const auto summary = read_json(s.dir / "summary.json");
  CHECK(summary["steps"] == 3);
  CHECK(summary["held_out_ring_energy"]["uncorrected"].get<double>() > 0.0);

  auto use = in_dir(s.dir / "apply");
  use.corrector.method = "net";
  use.corrector.net_params = (s.dir / "model").string();
  CHECK(run_cmd("correct", use).code == 0);
}
