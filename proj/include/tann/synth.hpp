#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tann/dataset.hpp"
#include "tann/detail/text.hpp"
#include "tann/errors.hpp"

namespace tann {

/// Planted-theme generator: every theme has a nonnegative feature prototype,
/// a few words of its own and a fixed subset of the shared common words.
struct SynthParams {
  int themes = 8;
  int images_per_theme = 40;
  int dim = 64;
  double noise = 0.05;
  int distinctive_words = 3;
  int common_words = 5;
  int common_per_theme = 2;
  double support_fraction = 0.25;  // share of prototype coordinates that are nonzero
  std::uint64_t seed = 1;

  void validate() const {
    if (themes < 1 || images_per_theme < 1 || dim < 1) throw ArgumentError("themes, images_per_theme, dim must be >= 1");
    if (!(noise >= 0.0)) throw ArgumentError("noise must be nonnegative");
    if (distinctive_words < 1) throw ArgumentError("distinctive_words must be >= 1");
    if (common_words < 0 || common_per_theme < 0 || common_per_theme > common_words)
      throw ArgumentError("need 0 <= common_per_theme <= common_words");
    if (!(support_fraction > 0.0 && support_fraction <= 1.0)) throw ArgumentError("support_fraction must lie in (0,1]");
  }
};

struct SynthDataset {
  FeatureMatrix features;
  LabelCorpus labels;
  std::vector<long> assignment;  // planted theme per image, feature order
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Box-Muller on the raw engine; std::normal_distribution differs across standard libraries.
inline double gaussian(std::mt19937_64& rng) {
  double u1 = 0.0;
  do {
    u1 = uniform01(rng);
  } while (u1 <= 0.0);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline std::string padded(long v, int width) {
  std::string s = std::to_string(v);
  return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

}  // namespace detail

inline SynthDataset generate_synthetic(const SynthParams& p) {
  p.validate();
  std::mt19937_64 rng(p.seed);

  std::vector<Eigen::VectorXd> prototypes;
  for (int t = 0; t < p.themes; ++t) {
    Eigen::VectorXd proto = Eigen::VectorXd::Zero(p.dim);
    for (int d = 0; d < p.dim; ++d)
      if (detail::uniform01(rng) < p.support_fraction) proto[d] = 0.5 + detail::uniform01(rng);
    if (proto.isZero()) proto[static_cast<Eigen::Index>(detail::bounded(rng, static_cast<std::uint64_t>(p.dim)))] = 1.0;
    prototypes.push_back(proto);
  }

  std::vector<std::vector<int>> theme_common(p.themes);
  for (int t = 0; t < p.themes; ++t) {
    std::vector<int> pool(p.common_words);
    for (int c = 0; c < p.common_words; ++c) pool[c] = c;
    detail::shuffle(pool, rng);
    theme_common[t].assign(pool.begin(), pool.begin() + p.common_per_theme);
    std::sort(theme_common[t].begin(), theme_common[t].end());
  }

  const long n = static_cast<long>(p.themes) * p.images_per_theme;
  const int id_width = static_cast<int>(std::to_string(n - 1).size());
  std::vector<std::string> ids;
  Eigen::MatrixXd cols(p.dim, n);
  SynthDataset out;
  long col = 0;
  for (int t = 0; t < p.themes; ++t) {
    for (int i = 0; i < p.images_per_theme; ++i, ++col) {
      const std::string id = "img" + detail::padded(col, id_width);
      const double scale = 0.8 + 0.4 * detail::uniform01(rng);
      for (int d = 0; d < p.dim; ++d)
        cols(d, col) = std::max(0.0, scale * prototypes[t][d] + p.noise * detail::gaussian(rng));
      std::vector<WordCount> words;
      for (int w = 0; w < p.distinctive_words; ++w)
        words.push_back({"theme" + std::to_string(t) + "word" + std::to_string(w),
                         1 + static_cast<int>(detail::bounded(rng, 2))});
      for (int c : theme_common[t]) words.push_back({"common" + std::to_string(c), 1});
      out.labels.entries.emplace(id, std::move(words));
      out.assignment.push_back(t);
      ids.push_back(id);
    }
  }
  out.features = FeatureMatrix(std::move(ids), std::move(cols));
  return out;
}

inline std::string format_assignment(const SynthDataset& ds) {
  std::string out;
  for (std::size_t i = 0; i < ds.assignment.size(); ++i)
    out += ds.features.ids()[i] + "\t" + std::to_string(ds.assignment[i]) + "\n";
  return out;
}

}  // namespace tann
