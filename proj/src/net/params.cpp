#include "ringkit/net/params.hpp"

#include <cmath>

#include "ringkit/error.hpp"
#include "ringkit/io.hpp"

namespace ringkit::net {

Var ParamStore::add(const std::string& name, Tensor init) {
  require(!contains(name), "parameter '" + name + "' registered twice");
  Var v = parameter(std::move(init));
  entries_.emplace_back(name, v);
  return v;
}

Var ParamStore::add_uniform(const std::string& name, Dims dims, std::size_t fan_in, double gain) {
  Tensor t(std::move(dims));
  const double bound = gain * std::sqrt(3.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = bound * (2.0 * rng_.uniform() - 1.0);
  return add(name, std::move(t));
}

Var ParamStore::add_constant(const std::string& name, Dims dims, double value) {
  return add(name, Tensor(std::move(dims), value));
}

const Var& ParamStore::get(const std::string& name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return v;
  }
  throw_invalid("unknown parameter '" + name + "'");
}

bool ParamStore::contains(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return true;
  }
  return false;
}

std::vector<Var> ParamStore::vars() const {
  std::vector<Var> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.second);
  return out;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second->value.size();
  return n;
}

namespace {

std::string file_name(const std::string& name) {
  std::string f = name;
  for (char& ch : f) {
    if (ch == '/' || ch == '.') ch = '_';
  }
  return f + ".rngk";
}

}  // namespace

void ParamStore::save(const std::filesystem::path& dir, const nlohmann::json& extra) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw_io("cannot create parameter directory " + dir.string() + ": " + ec.message());
  nlohmann::json manifest;
  manifest["seed"] = seed_;
  manifest["params"] = nlohmann::json::array();
  for (const auto& [name, v] : entries_) {
    const std::string file = file_name(name);
    save_raw(v->value, dir / file, {{"name", name}});
    manifest["params"].push_back({{"name", name}, {"file", file}, {"dims", v->value.dims()}});
  }
  manifest["extra"] = extra;
  write_json(manifest, dir / "manifest.json");
}

nlohmann::json ParamStore::read_manifest(const std::filesystem::path& dir) {
  return read_json(dir / "manifest.json");
}

void ParamStore::load(const std::filesystem::path& dir) {
  const nlohmann::json manifest = read_manifest(dir);
  const auto& list = manifest.at("params");
  if (list.size() != entries_.size()) {
    throw_io("parameter count mismatch in " + dir.string() + ": file has " + std::to_string(list.size()) +
             ", model expects " + std::to_string(entries_.size()));
  }
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& [name, v] = entries_[i];
    if (list[i].at("name").get<std::string>() != name) {
      throw_io("parameter " + std::to_string(i) + " is '" + list[i].at("name").get<std::string>() +
               "', model expects '" + name + "'");
    }
    Tensor t = load_raw(dir / list[i].at("file").get<std::string>());
    if (t.dims() != v->value.dims()) {
      throw_io("parameter '" + name + "' has dims " + dims_to_string(t.dims()) + ", expected " +
               dims_to_string(v->value.dims()));
    }
    v->value = std::move(t);
  }
}

}  // namespace ringkit::net
