#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tann/detail/text.hpp"
#include "tann/errors.hpp"
#include "tann/textproc.hpp"

namespace tann {

struct WordCounts {
  std::string word;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long train_frequency = 0;

  double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
};

/// One row per vocabulary word, in vocabulary order.
using WordConfusion = std::vector<WordCounts>;

using WordSets = std::map<std::string, std::vector<std::string>>;

/**
 * Accumulates per-word TP/FP/FN over all test images. Words outside the
 * vocabulary are ignored; duplicate words within one image count once.
 * `train_frequency` maps words to their training image frequency.
 */
inline WordConfusion confusion_counts(const WordSets& predictions, const WordSets& truth, const Vocabulary& vocab,
                                      const std::map<std::string, int>& train_frequency = {}) {
  std::vector<std::string> unmatched;
  for (const auto& [id, words] : predictions)
    if (!truth.count(id)) unmatched.push_back(id);
  for (const auto& [id, words] : truth)
    if (!predictions.count(id)) unmatched.push_back(id);
  if (!unmatched.empty()) {
    std::sort(unmatched.begin(), unmatched.end());
    std::string msg = "prediction and truth image ids differ:";
    for (const auto& id : unmatched) msg += " " + id;
    throw KeyMismatchError(msg);
  }

  WordConfusion table(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    table[i].word = vocab.word(i);
    if (auto it = train_frequency.find(vocab.word(i)); it != train_frequency.end()) table[i].train_frequency = it->second;
  }
  auto indices = [&](const std::vector<std::string>& words) {
    std::set<std::size_t> out;
    for (const auto& w : words)
      if (auto i = vocab.find(w)) out.insert(*i);
    return out;
  };
  for (const auto& [id, truth_words] : truth) {
    const auto pred = indices(predictions.at(id));
    const auto real = indices(truth_words);
    for (auto i : pred) (real.count(i) ? table[i].tp : table[i].fp) += 1;
    for (auto i : real)
      if (!pred.count(i)) table[i].fn += 1;
  }
  return table;
}

struct FrequencyBin {
  double mean_frequency = 0.0;
  double mean_precision = 0.0;
};

struct MetricsReport {
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f = 0.0;
  std::size_t n_plus = 0;  // words with recall > 0
  WordConfusion per_word;
  std::vector<FrequencyBin> bins;
};

// Harmonic mean; 0 when both are 0.
inline double f_measure(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

/// Unweighted per-word means over the whole vocabulary; F is taken from the means.
inline MetricsReport mean_metrics(const WordConfusion& table) {
  if (table.empty()) throw ArgumentError("confusion table is empty");
  MetricsReport r;
  r.per_word = table;
  double sp = 0.0, sr = 0.0;
  for (const auto& w : table) {
    sp += w.precision();
    sr += w.recall();
    if (w.recall() > 0.0) ++r.n_plus;
  }
  const double m = static_cast<double>(table.size());
  r.mean_precision = sp / m;
  r.mean_recall = sr / m;
  r.mean_f = f_measure(r.mean_precision, r.mean_recall);
  return r;
}

/// Words sorted by training frequency (ties: word), chunked into bins of `bin_size`; the last may be short.
inline std::vector<FrequencyBin> precision_frequency_bins(const WordConfusion& table, std::size_t bin_size = 10) {
  if (bin_size < 1) throw ArgumentError("bin_size must be >= 1");
  std::vector<const WordCounts*> sorted;
  for (const auto& w : table) sorted.push_back(&w);
  std::sort(sorted.begin(), sorted.end(), [](const WordCounts* a, const WordCounts* b) {
    if (a->train_frequency != b->train_frequency) return a->train_frequency < b->train_frequency;
    return a->word < b->word;
  });
  std::vector<FrequencyBin> bins;
  for (std::size_t start = 0; start < sorted.size(); start += bin_size) {
    const std::size_t end = std::min(sorted.size(), start + bin_size);
    FrequencyBin bin;
    for (std::size_t i = start; i < end; ++i) {
      bin.mean_frequency += static_cast<double>(sorted[i]->train_frequency);
      bin.mean_precision += sorted[i]->precision();
    }
    bin.mean_frequency /= static_cast<double>(end - start);
    bin.mean_precision /= static_cast<double>(end - start);
    bins.push_back(bin);
  }
  return bins;
}

inline std::string format_metrics_tsv(const WordConfusion& table) {
  std::string out = "word\ttp\tfp\tfn\tprecision\trecall\tfrequency\n";
  for (const auto& w : table) {
    out += w.word + "\t" + std::to_string(w.tp) + "\t" + std::to_string(w.fp) + "\t" + std::to_string(w.fn) + "\t" +
           detail::format_fixed(w.precision()) + "\t" + detail::format_fixed(w.recall()) + "\t" +
           std::to_string(w.train_frequency) + "\n";
  }
  return out;
}

inline std::string format_bins_tsv(const std::vector<FrequencyBin>& bins) {
  std::string out = "mean_frequency\tmean_precision\n";
  for (const auto& b : bins) out += detail::format_fixed(b.mean_frequency) + "\t" + detail::format_fixed(b.mean_precision) + "\n";
  return out;
}

inline std::string format_report(const MetricsReport& r, std::size_t test_images) {
  std::string out;
  out += "test_images        " + std::to_string(test_images) + "\n";
  out += "vocabulary_size    " + std::to_string(r.per_word.size()) + "\n";
  out += "mean_precision     " + detail::format_fixed(r.mean_precision) + "\n";
  out += "mean_recall        " + detail::format_fixed(r.mean_recall) + "\n";
  out += "mean_f             " + detail::format_fixed(r.mean_f) + "\n";
  out += "n_plus             " + std::to_string(r.n_plus) + "\n";
  out += "frequency_bins     " + std::to_string(r.bins.size()) + "\n";
  return out;
}

}  // namespace tann
