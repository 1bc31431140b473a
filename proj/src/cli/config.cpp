#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "ringkit/cli.hpp"
#include "ringkit/error.hpp"

namespace ringkit::cli {

namespace {

// Calls f(section, key, field&) for every configurable field; section "" is the top level.
template <class Cfg, class F>
void visit_fields(Cfg& c, F&& f) {
  f("", "seed", c.seed);
  f("", "output_dir", c.output_dir);
  f("", "threads", c.threads);

  auto& g = c.geometry;
  f("geometry", "sdd_mm", g.sdd_mm);
  f("geometry", "sod_mm", g.sod_mm);
  f("geometry", "n_det", g.n_det);
  f("geometry", "det_spacing_mm", g.det_spacing_mm);
  f("geometry", "n_angles", g.n_angles);
  f("geometry", "angle_span_rad", g.angle_span_rad);

  auto& p = c.phantom;
  f("phantom", "kind", p.kind);
  f("phantom", "cx_mm", p.cx_mm);
  f("phantom", "cy_mm", p.cy_mm);
  f("phantom", "a_mm", p.a_mm);
  f("phantom", "b_mm", p.b_mm);
  f("phantom", "rot_rad", p.rot_rad);
  f("phantom", "radius_mm", p.radius_mm);
  f("phantom", "mu", p.mu);

  f("noise", "enabled", c.noise.enabled);
  f("noise", "i0", c.noise.i0);

  f("error_model", "sigma_gain", c.error_model.sigma_gain);
  f("error_model", "sigma_offset", c.error_model.sigma_offset);
  f("error_model", "sigma_quad", c.error_model.sigma_quad);

  auto& k = c.corrector;
  f("corrector", "method", k.method);
  f("corrector", "wff_family", k.wff_family);
  f("corrector", "wff_levels", k.wff_levels);
  f("corrector", "wff_boundary", k.wff_boundary);
  f("corrector", "wff_sigma", k.wff_sigma);
  f("corrector", "wff_all_bands", k.wff_all_bands);
  f("corrector", "tv_lambda", k.tv_lambda);
  f("corrector", "tv_outer_iters", k.tv_outer_iters);
  f("corrector", "tv_relax", k.tv_relax);
  f("corrector", "tv_gauss_sigma", k.tv_gauss_sigma);
  f("corrector", "tv_iters", k.tv_iters);
  f("corrector", "net_params", k.net_params);

  auto& r = c.recon;
  f("recon", "out_size", r.out_size);
  f("recon", "pixel_size_mm", r.pixel_size_mm);
  f("recon", "filter", r.filter);
  f("recon", "pad_factor", r.pad_factor);

  auto& n = c.network;
  f("network", "levels", n.levels);
  f("network", "channels", n.channels);
  f("network", "token_grid", n.token_grid);
  f("network", "use_glfig", n.use_glfig);
  f("network", "steps", n.steps);
  f("network", "lr", n.lr);
  f("network", "tiles", n.tiles);
  f("network", "tile", n.tile);
  f("network", "phantoms", n.phantoms);

  auto& m = c.metrics;
  f("metrics", "mu_water", m.mu_water);
  f("metrics", "data_range", m.data_range);
  f("metrics", "coupling_row", m.coupling_row);
  f("metrics", "coupling_family", m.coupling_family);
  f("metrics", "coupling_levels", m.coupling_levels);
  f("metrics", "coupling_boundary", m.coupling_boundary);
  f("metrics", "coupling_sigma_gain", m.coupling_sigma_gain);
  f("metrics", "coupling_sigma_offset", m.coupling_sigma_offset);
  f("metrics", "ring_radius_mm", m.ring_radius_mm);
}

const std::vector<std::string> kSections = {"geometry", "phantom",    "noise",   "error_model",
                                            "corrector", "recon",     "network", "metrics"};

std::string key_path(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

using Value = std::variant<std::string, std::int64_t, std::uint64_t, double, bool>;

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Removes a trailing # comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (in_str && ch == '\\') {
      ++i;
    } else if (ch == '"') {
      in_str = !in_str;
    } else if (ch == '#' && !in_str) {
      return line.substr(0, i);
    }
  }
  return line;
}

bool bare_key(const std::string& k) {
  return !k.empty() && std::all_of(k.begin(), k.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
  });
}

Value parse_value(const std::string& raw, const std::string& where) {
  if (raw.empty()) throw_config(where + ": missing value");
  if (raw.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < raw.size() && raw[i] != '"'; ++i) {
      if (raw[i] == '\\') {
        if (++i == raw.size()) break;
        switch (raw[i]) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: throw_config(where + ": unsupported escape \\" + std::string(1, raw[i]));
        }
      } else {
        out += raw[i];
      }
    }
    if (i != raw.size() - 1) throw_config(where + ": malformed string " + raw);
    return out;
  }
  if (raw == "true") return true;
  if (raw == "false") return false;

  std::string num;
  for (char ch : raw) {
    if (ch != '_') num += ch;
  }
  const char* b = num.data();
  const char* e = num.data() + num.size();
  const bool is_float = num.find_first_of(".eE") != std::string::npos ||
                        num == "inf" || num == "+inf" || num == "-inf" || num == "nan";
  if (!is_float) {
    const char* start = (*b == '+') ? b + 1 : b;
    if (*start == '-') {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(start, e, v);
      if (ec == std::errc() && ptr == e) return v;
    } else {
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(start, e, v);
      if (ec == std::errc() && ptr == e) return v;
    }
    throw_config(where + ": cannot parse value " + raw);
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars((*b == '+') ? b + 1 : b, e, v);
  if (ec != std::errc() || ptr != e) throw_config(where + ": cannot parse value " + raw);
  return v;
}

void assign(std::string& field, const Value& v, const std::string& where) {
  if (auto* s = std::get_if<std::string>(&v)) {
    field = *s;
    return;
  }
  throw_config(where + ": expected a string");
}

void assign(bool& field, const Value& v, const std::string& where) {
  if (auto* b = std::get_if<bool>(&v)) {
    field = *b;
    return;
  }
  throw_config(where + ": expected true or false");
}

void assign(double& field, const Value& v, const std::string& where) {
  if (auto* d = std::get_if<double>(&v)) {
    field = *d;
  } else if (auto* u = std::get_if<std::uint64_t>(&v)) {
    field = static_cast<double>(*u);
  } else if (auto* i = std::get_if<std::int64_t>(&v)) {
    field = static_cast<double>(*i);
  } else {
    throw_config(where + ": expected a number");
  }
  if (!std::isfinite(field)) throw_config(where + ": must be finite");
}

void assign(std::uint64_t& field, const Value& v, const std::string& where) {
  if (auto* u = std::get_if<std::uint64_t>(&v)) {
    field = *u;
    return;
  }
  throw_config(where + ": expected a non-negative integer");
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, ptr);
  if (s.find_first_of(".eE") == std::string::npos && s.find("inf") == std::string::npos &&
      s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += ch;
    }
  }
  return out + "\"";
}

std::string format(const std::string& v) { return quote(v); }
std::string format(bool v) { return v ? "true" : "false"; }
std::string format(double v) { return format_double(v); }
std::string format(std::uint64_t v) { return std::to_string(v); }

// Re-raises validation errors from a module as config errors under a section name.
template <class F>
void in_section(const std::string& section, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    throw_config("[" + section + "] " + e.what());
  }
}

}  // namespace

EllipsePhantom PhantomConfig::build(Rng& rng) const {
  if (kind == "ellipse") return EllipsePhantom{{Ellipse{cx_mm, cy_mm, a_mm, b_mm, rot_rad, mu}}};
  if (kind == "disc") return EllipsePhantom::centered_disc(radius_mm, mu);
  if (kind == "head") return EllipsePhantom::head(radius_mm, mu);
  if (kind == "random") return net::random_phantom(rng);
  throw_config("phantom.kind: unknown phantom '" + kind + "' (valid: ellipse, disc, head, random)");
}

WffConfig CorrectorConfig::wff() const {
  WffConfig c;
  c.wavelet = WaveletSpec{parse_wavelet_family(wff_family), wff_levels, parse_boundary(wff_boundary)};
  c.damping_sigma = wff_sigma;
  c.all_bands = wff_all_bands;
  return c;
}

MpTvgConfig CorrectorConfig::mp_tvg() const {
  MpTvgConfig c;
  c.relax = tv_relax;
  c.gauss_sigma = tv_gauss_sigma;
  c.tv_lambda = tv_lambda;
  c.outer_iters = tv_outer_iters;
  c.tv_iters = tv_iters;
  return c;
}

PolarTvConfig CorrectorConfig::polar_tv() const {
  PolarTvConfig c;
  c.tv_lambda = tv_lambda;
  c.outer_iters = tv_outer_iters;
  c.relax = tv_relax;
  c.gauss_sigma = tv_gauss_sigma;
  c.tv_iters = tv_iters;
  return c;
}

ReconConfig ReconSection::build() const {
  ReconConfig c;
  c.out_size = out_size;
  c.pixel_size_mm = pixel_size_mm;
  c.filter = parse_recon_filter(filter);
  c.pad_factor = pad_factor;
  return c;
}

net::PipelineConfig NetworkSection::pipeline() const {
  net::PipelineConfig c;
  c.levels = levels;
  c.channels = channels;
  c.token_grid = token_grid;
  c.use_glfig = use_glfig;
  return c;
}

net::ToyDataConfig ExperimentConfig::toy_data() const {
  net::ToyDataConfig c;
  c.tiles = network.tiles;
  c.tile = network.tile;
  c.phantoms = network.phantoms;
  c.sigma_gain = error_model.sigma_gain;
  c.i0 = noise.i0;
  c.geometry = geometry;
  return c;
}

void ExperimentConfig::validate() const {
  if (output_dir.empty()) throw_config("output_dir: must not be empty");
  in_section("geometry", [&] { geometry.validate(); });

  const auto& kinds = {"ellipse", "disc", "head", "random"};
  if (std::find(kinds.begin(), kinds.end(), phantom.kind) == kinds.end()) {
    throw_config("phantom.kind: unknown phantom '" + phantom.kind +
                 "' (valid: ellipse, disc, head, random)");
  }
  if (phantom.kind == "ellipse" && !(phantom.a_mm > 0 && phantom.b_mm > 0)) {
    throw_config("phantom.a_mm/b_mm: semi-axes must be positive");
  }
  if ((phantom.kind == "disc" || phantom.kind == "head") && !(phantom.radius_mm > 0)) {
    throw_config("phantom.radius_mm: must be positive");
  }
  if (noise.enabled && !(noise.i0 > 0)) throw_config("noise.i0: must be positive");
  if (error_model.sigma_gain < 0) throw_config("error_model.sigma_gain: must be >= 0");
  if (error_model.sigma_offset < 0) throw_config("error_model.sigma_offset: must be >= 0");
  if (error_model.sigma_quad < 0) throw_config("error_model.sigma_quad: must be >= 0");

  const auto& methods = correction_methods();
  if (std::find(methods.begin(), methods.end(), corrector.method) == methods.end()) {
    std::string valid;
    for (const auto& m : methods) valid += (valid.empty() ? "" : ", ") + m;
    throw_config("corrector.method: unknown method '" + corrector.method + "' (valid: " + valid + ")");
  }
  in_section("corrector", [&] { corrector.wff().validate(); });
  in_section("corrector", [&] { corrector.mp_tvg().validate(); });
  in_section("corrector", [&] { corrector.polar_tv().validate(); });
  in_section("recon", [&] { recon.build().validate(); });
  in_section("network", [&] { network.pipeline().validate(); });
  in_section("network", [&] { toy_data().validate(); });
  if (network.steps == 0) throw_config("network.steps: must be positive");
  if (!(network.lr >= 0)) throw_config("network.lr: must be >= 0");

  if (!(metrics.mu_water > 0)) throw_config("metrics.mu_water: must be positive");
  if (metrics.data_range < 0) throw_config("metrics.data_range: must be >= 0");
  if (metrics.coupling_row >= geometry.n_det) {
    throw_config("metrics.coupling_row: must be below geometry.n_det");
  }
  in_section("metrics", [&] {
    parse_wavelet_family(metrics.coupling_family);
    parse_boundary(metrics.coupling_boundary);
  });
  if (metrics.coupling_levels == 0) throw_config("metrics.coupling_levels: must be >= 1");
  if (metrics.coupling_sigma_gain < 0 || metrics.coupling_sigma_offset < 0) {
    throw_config("metrics.coupling_sigma_*: must be >= 0");
  }
  if (metrics.ring_radius_mm < 0) throw_config("metrics.ring_radius_mm: must be >= 0");
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin,
                              ExperimentConfig base) {
  std::set<std::string> known_keys;
  visit_fields(base, [&](const std::string& s, const std::string& k, auto&) {
    known_keys.insert(key_path(s, k));
  });

  std::istringstream in(text);
  std::string line;
  std::string section;
  std::set<std::string> seen_sections, seen_keys;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where_line = origin + ":" + std::to_string(line_no);
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw_config(where_line + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
        throw_config(where_line + ": unknown section [" + section + "]");
      }
      if (!seen_sections.insert(section).second) {
        throw_config(where_line + ": duplicate section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw_config(where_line + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!bare_key(key)) throw_config(where_line + ": invalid key '" + key + "'");
    const std::string path = key_path(section, key);
    const std::string where = where_line + ": " + path;
    if (!known_keys.count(path)) throw_config(where + ": unknown key");
    if (!seen_keys.insert(path).second) throw_config(where + ": duplicate key");
    const Value value = parse_value(trim(line.substr(eq + 1)), where);
    visit_fields(base, [&](const std::string& s, const std::string& k, auto& field) {
      if (s == section && k == key) {
        using T = std::decay_t<decltype(field)>;
        if constexpr (std::is_same_v<T, std::size_t> && !std::is_same_v<T, std::uint64_t>) {
          std::uint64_t u = 0;
          assign(u, value, where);
          field = static_cast<std::size_t>(u);
        } else {
          assign(field, value, where);
        }
      }
    });
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_io("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path, std::move(base));
}

std::string to_toml(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  std::map<std::string, std::string> body;
  std::vector<std::string> order{""};
  for (const auto& s : kSections) order.push_back(s);
  visit_fields(copy, [&](const std::string& s, const std::string& k, auto& field) {
    using T = std::decay_t<decltype(field)>;
    std::string v;
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      v = format(static_cast<std::uint64_t>(field));
    } else {
      v = format(field);
    }
    body[s] += k + " = " + v + "\n";
  });
  std::string out;
  for (const auto& s : order) {
    if (!s.empty()) out += "\n[" + s + "]\n";
    out += body[s];
  }
  return out;
}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"simulate", "corrupt",          "correct",  "reconstruct",
                                             "metrics",  "analyze-coupling", "train-toy"};
  return c;
}

const std::vector<std::string>& correction_methods() {
  static const std::vector<std::string> m = {"wff", "mptvg", "polartv_lite", "net"};
  return m;
}

}  // namespace ringkit::cli
