#include "pointvet/io/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "pointvet/core/errors.hpp"

namespace pvet::io {

namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& expected,
                            const std::string& got) {
  throw ConfigError("config key '" + key + "': expected " + expected + ", got '" + got + "'");
}

long long parse_ll(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, "integer", v);
  return out;
}

double parse_d(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) bad_value(key, "number", v);
  return out;
}

bool parse_b(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, "boolean", v);
}

std::string fmt_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, p) : std::to_string(v);
}

struct KeyDef {
  std::string name;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <class Acc>
KeyDef key_str(std::string name, Acc acc) {
  return {name, [acc](PipelineConfig& c, const std::string& v) { acc(c) = v; },
          [acc](const PipelineConfig& c) { return acc(const_cast<PipelineConfig&>(c)); }};
}

template <class Acc>
KeyDef key_int(std::string name, Acc acc) {
  return {name,
          [acc, name](PipelineConfig& c, const std::string& v) {
            acc(c) = int(parse_ll(name, v));
          },
          [acc](const PipelineConfig& c) {
            return std::to_string(acc(const_cast<PipelineConfig&>(c)));
          }};
}

template <class Acc>
KeyDef key_u64(std::string name, Acc acc) {
  return {name,
          [acc, name](PipelineConfig& c, const std::string& v) {
            uint64_t out = 0;
            const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
            if (ec != std::errc() || p != v.data() + v.size()) bad_value(name, "integer", v);
            acc(c) = out;
          },
          [acc](const PipelineConfig& c) {
            return std::to_string(acc(const_cast<PipelineConfig&>(c)));
          }};
}

template <class Acc>
KeyDef key_dbl(std::string name, Acc acc) {
  return {name,
          [acc, name](PipelineConfig& c, const std::string& v) { acc(c) = parse_d(name, v); },
          [acc](const PipelineConfig& c) {
            return fmt_double(acc(const_cast<PipelineConfig&>(c)));
          }};
}

template <class Acc>
KeyDef key_bool(std::string name, Acc acc) {
  return {name,
          [acc, name](PipelineConfig& c, const std::string& v) { acc(c) = parse_b(name, v); },
          [acc](const PipelineConfig& c) {
            return acc(const_cast<PipelineConfig&>(c)) ? "true" : "false";
          }};
}

const std::vector<KeyDef>& registry() {
  static const std::vector<KeyDef> keys = [] {
    std::vector<KeyDef> k;
    k.push_back(key_str("dataset", [](PipelineConfig& c) -> std::string& { return c.dataset; }));
    k.push_back(key_str("cloud", [](PipelineConfig& c) -> std::string& { return c.cloud; }));
    k.push_back(key_str("colmap", [](PipelineConfig& c) -> std::string& { return c.colmap; }));
    k.push_back(key_str("out", [](PipelineConfig& c) -> std::string& { return c.out; }));
    k.push_back(key_u64("seed", [](PipelineConfig& c) -> uint64_t& { return c.seed; }));
    k.push_back(key_int("threads", [](PipelineConfig& c) -> int& { return c.threads; }));

    k.push_back(key_bool("synth.enabled", [](PipelineConfig& c) -> bool& { return c.synth.enabled; }));
    k.push_back(key_str("synth.primitives", [](PipelineConfig& c) -> std::string& { return c.synth.primitives; }));
    k.push_back(key_int("synth.images", [](PipelineConfig& c) -> int& { return c.synth.images; }));
    k.push_back(key_int("synth.width", [](PipelineConfig& c) -> int& { return c.synth.width; }));
    k.push_back(key_int("synth.height", [](PipelineConfig& c) -> int& { return c.synth.height; }));
    k.push_back(key_dbl("synth.spacing", [](PipelineConfig& c) -> double& { return c.synth.spacing; }));
    k.push_back(key_int("synth.outliers", [](PipelineConfig& c) -> int& { return c.synth.outliers; }));
    k.push_back(key_str("synth.ablations", [](PipelineConfig& c) -> std::string& { return c.synth.ablations; }));

    k.push_back(key_int("optim.epochs", [](PipelineConfig& c) -> int& { return c.optim.epochs; }));
    k.push_back(key_str("optim.loss", [](PipelineConfig& c) -> std::string& { return c.optim.loss; }));
    k.push_back(key_dbl("optim.lr_color", [](PipelineConfig& c) -> double& { return c.optim.lr_color; }));
    k.push_back(key_dbl("optim.lr_alpha", [](PipelineConfig& c) -> double& { return c.optim.lr_alpha; }));
    k.push_back(key_bool("optim.lr_decay", [](PipelineConfig& c) -> bool& { return c.optim.lr_decay; }));
    k.push_back(key_int("optim.clean_every", [](PipelineConfig& c) -> int& { return c.optim.clean_every; }));
    k.push_back(key_dbl("optim.clean_threshold", [](PipelineConfig& c) -> double& { return c.optim.clean_threshold; }));
    k.push_back(key_dbl("optim.opacity_bias", [](PipelineConfig& c) -> double& { return c.optim.opacity_bias; }));
    k.push_back(key_dbl("optim.narrowing_factor", [](PipelineConfig& c) -> double& { return c.optim.narrowing_factor; }));
    k.push_back(key_int("optim.transition_epoch", [](PipelineConfig& c) -> int& { return c.optim.transition_epoch; }));

    k.push_back(key_str("schedule.spawn_epochs", [](PipelineConfig& c) -> std::string& { return c.schedule.spawn_epochs; }));
    k.push_back(key_int("schedule.vet_iterations", [](PipelineConfig& c) -> int& { return c.schedule.vet_iterations; }));

    k.push_back(key_str("vet.metric", [](PipelineConfig& c) -> std::string& { return c.vet.metric; }));
    k.push_back(key_dbl("vet.focus", [](PipelineConfig& c) -> double& { return c.vet.focus; }));
    k.push_back(key_int("vet.grid", [](PipelineConfig& c) -> int& { return c.vet.grid; }));
    k.push_back(key_dbl("vet.tv_weight", [](PipelineConfig& c) -> double& { return c.vet.tv_weight; }));
    k.push_back(key_int("vet.iterations", [](PipelineConfig& c) -> int& { return c.vet.iterations; }));
    k.push_back(key_dbl("vet.step_size", [](PipelineConfig& c) -> double& { return c.vet.step_size; }));
    k.push_back(key_dbl("vet.ray_step", [](PipelineConfig& c) -> double& { return c.vet.ray_step; }));
    k.push_back(key_dbl("vet.inner_fraction", [](PipelineConfig& c) -> double& { return c.vet.inner_fraction; }));

    k.push_back(key_int("spawn.p_max", [](PipelineConfig& c) -> int& { return c.spawn.p_max; }));
    k.push_back(key_str("spawn.color_init", [](PipelineConfig& c) -> std::string& { return c.spawn.color_init; }));

    k.push_back(key_bool("env.enabled", [](PipelineConfig& c) -> bool& { return c.env.enabled; }));
    k.push_back(key_int("env.layers", [](PipelineConfig& c) -> int& { return c.env.layers; }));
    k.push_back(key_int("env.points_per_layer", [](PipelineConfig& c) -> int& { return c.env.points_per_layer; }));
    k.push_back(key_str("env.radii", [](PipelineConfig& c) -> std::string& { return c.env.radii; }));

    k.push_back(key_int("split.every_kth", [](PipelineConfig& c) -> int& { return c.split.every_kth; }));
    k.push_back(key_dbl("eval.tau_factor", [](PipelineConfig& c) -> double& { return c.eval.tau_factor; }));

    k.push_back(key_str("render.background", [](PipelineConfig& c) -> std::string& { return c.render.background; }));
    k.push_back(key_str("render.mode", [](PipelineConfig& c) -> std::string& { return c.render.mode; }));
    k.push_back(key_dbl("render.steepness", [](PipelineConfig& c) -> double& { return c.render.steepness; }));
    return k;
  }();
  return keys;
}

}  // namespace

void apply_config_value(PipelineConfig& config, const std::string& key,
                        const std::string& value) {
  for (const KeyDef& def : registry()) {
    if (def.name == key) {
      def.set(config, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void read_config_file(PipelineConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + " line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + " line " + std::to_string(line_no) + ": empty key");
    try {
      apply_config_value(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string serialize_config(const PipelineConfig& config) {
  std::ostringstream out;
  for (const KeyDef& def : registry()) out << def.name << " = " << def.get(config) << "\n";
  return out.str();
}

std::vector<double> parse_double_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    const std::string v = trim(item);
    if (v.empty()) bad_value(key, "comma-separated numbers", text);
    out.push_back(parse_d(key, v));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
  std::vector<int> out;
  for (double v : parse_double_list(text, key)) {
    const int i = int(v);
    if (double(i) != v) bad_value(key, "comma-separated integers", text);
    out.push_back(i);
  }
  return out;
}

}  // namespace pvet::io
