#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "tann/clustering.hpp"
#include "tann/detail/text.hpp"
#include "tann/errors.hpp"
#include "tann/pipeline.hpp"
#include "tann/solvers.hpp"

namespace tann {

/// Every knob of a pipeline run. Loaded from flat `key = value` files and overridden by flags.
struct RunConfig {
  std::string features;
  std::string labels;
  std::string output_dir = ".";

  int min_images = 1;
  std::size_t max_vocab = 0;  // 0: unlimited

  double cutoff = 0.25;
  Linkage linkage = Linkage::average;
  double coverage = 0.9;

  PipelineConfig pipeline;

  double test_fraction = 0.1;
  std::uint64_t seed = 1;

  std::string trace_image;  // write the layer-1 objective trace for this test image

  /// Sets one key from its textual value; throws ConfigError on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);

  std::vector<std::string> keys() const;
  std::string get(std::string_view key) const;

  /// `key = value` lines for every key, in a fixed order.
  std::string manifest() const {
    std::string out;
    for (const auto& k : keys()) out += k + " = " + get(k) + "\n";
    return out;
  }

  void validate() const {
    if (min_images < 1) throw ConfigError("min_images must be >= 1");
    if (!(cutoff > 0.0 && cutoff <= 1.0)) throw ArgumentError("cutoff must lie in (0,1]");
    if (!(coverage > 0.0 && coverage <= 1.0)) throw ArgumentError("coverage must lie in (0,1]");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ArgumentError("test_fraction must lie in (0,1)");
    pipeline.validate();
  }
};

namespace detail {

struct ConfigKey {
  const char* name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline double config_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  if (!parse_double(v, out) || !std::isfinite(out))
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
  return out;
}

template <typename Int>
Int config_int(std::string_view key, std::string_view v) {
  Int out = 0;
  if (!parse_int(v, out))
    throw ConfigError("key '" + std::string(key) + "': expected an integer, got '" + std::string(v) + "'");
  return out;
}

inline bool config_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + std::string(key) + "': expected true|false, got '" + std::string(v) + "'");
}

inline std::string bool_text(bool b) { return b ? "true" : "false"; }

#define TANN_KEY_STR(name, field) \
  {#name, [](RunConfig& c, std::string_view v) { c.field = std::string(v); }, [](const RunConfig& c) { return c.field; }}
#define TANN_KEY_DBL(name, field)                                                            \
  {#name, [](RunConfig& c, std::string_view v) { c.field = config_double(#name, v); },      \
   [](const RunConfig& c) { return format_roundtrip(c.field); }}
#define TANN_KEY_INT(name, field, type)                                                      \
  {#name, [](RunConfig& c, std::string_view v) { c.field = config_int<type>(#name, v); },   \
   [](const RunConfig& c) { return std::to_string(c.field); }}
#define TANN_KEY_BOOL(name, field)                                                           \
  {#name, [](RunConfig& c, std::string_view v) { c.field = config_bool(#name, v); },        \
   [](const RunConfig& c) { return bool_text(c.field); }}

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      TANN_KEY_STR(features, features),
      TANN_KEY_STR(labels, labels),
      TANN_KEY_STR(output_dir, output_dir),
      TANN_KEY_INT(min_images, min_images, int),
      TANN_KEY_INT(max_vocab, max_vocab, std::size_t),
      TANN_KEY_DBL(cutoff, cutoff),
      {"linkage", [](RunConfig& c, std::string_view v) {
         try {
           c.linkage = parse_linkage(v);
         } catch (const ArgumentError& e) {
           throw ConfigError(e.what());
         }
       },
       [](const RunConfig& c) { return to_string(c.linkage); }},
      TANN_KEY_DBL(coverage, coverage),
      TANN_KEY_DBL(lambda1, pipeline.solver.lambda1),
      TANN_KEY_DBL(lambda2, pipeline.solver.lambda2),
      TANN_KEY_DBL(rho, pipeline.solver.rho),
      TANN_KEY_DBL(tol, pipeline.solver.tol),
      TANN_KEY_INT(max_iter, pipeline.solver.max_iter, int),
      TANN_KEY_BOOL(normalize, pipeline.solver.normalize),
      {"step_rule", [](RunConfig& c, std::string_view v) {
         if (v == "fixed")
           c.pipeline.solver.step_rule = StepRule::fixed;
         else if (v == "backtracking")
           c.pipeline.solver.step_rule = StepRule::backtracking;
         else
           throw ConfigError("key 'step_rule': expected fixed|backtracking, got '" + std::string(v) + "'");
       },
       [](const RunConfig& c) {
         return std::string(c.pipeline.solver.step_rule == StepRule::fixed ? "fixed" : "backtracking");
       }},
      TANN_KEY_INT(B, pipeline.B, std::size_t),
      TANN_KEY_DBL(epsilon_group, pipeline.epsilon_group),
      TANN_KEY_BOOL(all_theme_members, pipeline.all_theme_members),
      TANN_KEY_INT(fallback_halvings, pipeline.fallback_halvings, int),
      TANN_KEY_DBL(test_fraction, test_fraction),
      TANN_KEY_INT(seed, seed, std::uint64_t),
      TANN_KEY_STR(trace_image, trace_image),
  };
  return keys;
}

#undef TANN_KEY_STR
#undef TANN_KEY_DBL
#undef TANN_KEY_INT
#undef TANN_KEY_BOOL

inline const ConfigKey& find_key(std::string_view key) {
  for (const auto& k : config_keys())
    if (key == k.name) return k;
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

}  // namespace detail

inline void RunConfig::set(std::string_view key, std::string_view value) { detail::find_key(key).set(*this, value); }

inline std::string RunConfig::get(std::string_view key) const { return detail::find_key(key).get(*this); }

inline std::vector<std::string> RunConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& k : detail::config_keys()) out.emplace_back(k.name);
  return out;
}

/// Applies `key = value` lines on top of `base`.
inline RunConfig parse_config(std::string_view content, RunConfig base = {}, const std::string& origin = "<config>") {
  for (const auto& line : detail::content_lines(content)) {
    auto eq = line.text.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(origin + ":" + std::to_string(line.number) + ": expected 'key = value'");
    auto key = detail::trim(line.text.substr(0, eq));
    auto value = detail::trim(line.text.substr(eq + 1));
    try {
      base.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line.number) + ": " + e.what());
    }
  }
  return base;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  return parse_config(detail::read_file(path), std::move(base), path);
}

}  // namespace tann
