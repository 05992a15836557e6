#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tann/dataset.hpp"
#include "tann/detail/text.hpp"
#include "tann/errors.hpp"

namespace tann {

/// A classifier that assigns z distinct labels uniformly at random out of M;
/// the tracked word is truly present in a fraction X of the images.
struct RandomBaselineParams {
  long M = 1;
  long z = 1;
  double X = 0.0;

  void validate() const {
    if (M < 1) throw ArgumentError("M must be >= 1");
    if (z < 1 || z > M) throw ArgumentError("z must satisfy 1 <= z <= M");
    if (!(X >= 0.0 && X <= 1.0)) throw ArgumentError("X must lie in [0,1]");
  }
};

struct BaselineProbabilities {
  double p_word = 0.0;  // word assigned to an image
  double p_tp = 0.0;
  double p_fp = 0.0;
  double p_fn = 0.0;
};

inline BaselineProbabilities analytic_probabilities(const RandomBaselineParams& p) {
  p.validate();
  const double M = static_cast<double>(p.M);
  const double z = static_cast<double>(p.z);
  return {z / M, z * p.X / M, z * (1.0 - p.X) / M, p.X * (M - z) / M};
}

struct PrecisionRecall {
  double precision = 0.0;
  std::optional<double> recall;  // absent when X = 0
};

// Evaluated from the probabilities rather than the simplified forms (X and z/M).
inline PrecisionRecall analytic_pr(const RandomBaselineParams& p) {
  const auto pr = analytic_probabilities(p);
  PrecisionRecall out;
  out.precision = pr.p_tp / (pr.p_tp + pr.p_fp);
  if (pr.p_tp + pr.p_fn > 0.0) out.recall = pr.p_tp / (pr.p_tp + pr.p_fn);
  return out;
}

struct SimulatedPrecisionRecall {
  double precision = 0.0;
  double precision_se = 0.0;
  std::optional<double> recall;
  double recall_se = 0.0;
  long positives = 0;  // images truly carrying the tracked word
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Floyd's algorithm: uniform z-subset of [0, M); reports whether label 0 is in it.
inline bool subset_contains_zero(std::mt19937_64& rng, long M, long z, std::vector<long>& scratch) {
  scratch.clear();
  for (long j = M - z; j < M; ++j) {
    const long t = static_cast<long>(bounded(rng, static_cast<std::uint64_t>(j + 1)));
    bool seen = false;
    for (long s : scratch) seen = seen || s == t;
    scratch.push_back(seen ? j : t);
  }
  for (long s : scratch)
    if (s == 0) return true;
  return false;
}

inline void mean_and_se(const std::vector<double>& v, double& mean, double& se) {
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  se = 0.0;
  if (v.size() < 2) return;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace detail

/**
 * Monte-Carlo estimate of the tracked word's precision and recall. Each trial
 * uses its own engine seeded from (seed, trial); round(X * images) images are
 * true positives for the word, and every image receives an independent
 * uniform z-subset of the M labels. Reports the mean over trials and its
 * standard error.
 */
inline SimulatedPrecisionRecall simulate_random_classifier(const RandomBaselineParams& p, long images, long trials,
                                                           std::uint64_t seed) {
  p.validate();
  if (images < 1) throw ArgumentError("images must be >= 1");
  if (trials < 1) throw ArgumentError("trials must be >= 1");
  const long positives = std::lround(p.X * static_cast<double>(images));

  std::vector<double> precisions, recalls;
  std::vector<long> scratch;
  scratch.reserve(static_cast<std::size_t>(p.z));
  for (long trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(trial))));
    long tp = 0, fp = 0, fn = 0;
    for (long img = 0; img < images; ++img) {
      const bool assigned = detail::subset_contains_zero(rng, p.M, p.z, scratch);
      const bool truth = img < positives;
      if (assigned && truth) ++tp;
      if (assigned && !truth) ++fp;
      if (!assigned && truth) ++fn;
    }
    precisions.push_back(tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp));
    if (positives > 0) recalls.push_back(static_cast<double>(tp) / static_cast<double>(tp + fn));
  }

  SimulatedPrecisionRecall out;
  out.positives = positives;
  detail::mean_and_se(precisions, out.precision, out.precision_se);
  if (!recalls.empty()) {
    double mean = 0.0;
    detail::mean_and_se(recalls, mean, out.recall_se);
    out.recall = mean;
  }
  return out;
}

}  // namespace tann
