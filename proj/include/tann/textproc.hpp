#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tann/dataset.hpp"
#include "tann/detail/text.hpp"
#include "tann/errors.hpp"

namespace tann {

/// Ordered word list: descending image frequency, ties lexicographic.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
    if (words_.empty()) throw EmptyVocabularyError("vocabulary is empty");
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (words_[i].empty()) throw FormatError("vocabulary contains an empty word");
      if (!index_.emplace(words_[i], i).second)
        throw FormatError("vocabulary contains duplicate word '" + words_[i] + "'");
    }
  }

  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::string& word(std::size_t i) const { return words_.at(i); }
  bool contains(const std::string& w) const { return index_.count(w) != 0; }
  std::optional<std::size_t> find(const std::string& w) const {
    auto it = index_.find(w);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Number of images whose label list contains each word.
inline std::map<std::string, int> image_frequencies(const LabelCorpus& corpus) {
  std::map<std::string, int> df;
  for (const auto& [id, words] : corpus.entries)
    for (const auto& wc : words) ++df[wc.word];
  return df;
}

inline Vocabulary build_vocabulary(const LabelCorpus& corpus, int min_images = 1,
                                   std::optional<std::size_t> max_size = std::nullopt) {
  if (corpus.entries.empty()) throw ArgumentError("cannot build a vocabulary from an empty corpus");
  if (min_images < 1) throw ArgumentError("min_images must be >= 1");
  if (max_size && *max_size == 0) throw ArgumentError("max vocabulary size must be positive");
  std::vector<std::pair<std::string, int>> kept;
  for (const auto& [word, n] : image_frequencies(corpus))
    if (n >= min_images) kept.emplace_back(word, n);
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (max_size && kept.size() > *max_size) kept.resize(*max_size);
  if (kept.empty())
    throw EmptyVocabularyError("no word appears in at least " + std::to_string(min_images) + " images");
  std::vector<std::string> words;
  words.reserve(kept.size());
  for (auto& [w, n] : kept) words.push_back(std::move(w));
  return Vocabulary(std::move(words));
}

inline std::string format_vocabulary(const Vocabulary& vocab) {
  std::string out;
  for (const auto& w : vocab.words()) out += w + "\n";
  return out;
}

inline Vocabulary parse_vocabulary(std::string_view content) {
  std::vector<std::string> words;
  for (const auto& line : detail::content_lines(content)) words.emplace_back(detail::trim(line.text));
  return Vocabulary(std::move(words));
}

inline Vocabulary load_vocabulary(const std::string& path) { return parse_vocabulary(detail::read_file(path)); }

/// Sparse vector as (index, value) pairs sorted by index.
using SparseVector = std::vector<std::pair<std::size_t, double>>;

struct TfidfMatrix {
  std::size_t cols = 0;
  std::vector<SparseVector> rows;
};

/**
 * Weight of word i in image j is n_ij / N_i: the raw count of the word in that
 * image over the number of images carrying the word. No logarithm. N_i is
 * taken over `corpus` itself; words outside `vocab` are ignored.
 */
inline TfidfMatrix tfidf_weights(const LabelCorpus& corpus, const std::vector<std::string>& ids,
                                 const Vocabulary& vocab) {
  std::vector<int> df(vocab.size(), 0);
  for (const auto& id : ids)
    for (const auto& wc : corpus.words(id))
      if (auto i = vocab.find(wc.word)) ++df[*i];
  TfidfMatrix m;
  m.cols = vocab.size();
  m.rows.reserve(ids.size());
  for (const auto& id : ids) {
    SparseVector row;
    for (const auto& wc : corpus.words(id))
      if (auto i = vocab.find(wc.word)) row.emplace_back(*i, static_cast<double>(wc.count) / df[*i]);
    std::sort(row.begin(), row.end());
    m.rows.push_back(std::move(row));
  }
  return m;
}

inline TfidfMatrix tfidf_weights(const LabelCorpus& corpus, const Vocabulary& vocab) {
  std::vector<std::string> ids;
  for (const auto& [id, words] : corpus.entries) ids.push_back(id);
  return tfidf_weights(corpus, ids, vocab);
}

inline double squared_norm(const SparseVector& v) {
  double s = 0.0;
  for (const auto& [i, x] : v) s += x * x;
  return s;
}

inline double dot(const SparseVector& u, const SparseVector& v) {
  double s = 0.0;
  auto a = u.begin();
  auto b = v.begin();
  while (a != u.end() && b != v.end()) {
    if (a->first < b->first)
      ++a;
    else if (b->first < a->first)
      ++b;
    else
      s += (a++)->second * (b++)->second;
  }
  return s;
}

// Cosine of two vectors; 0 when either is all-zero.
inline double cosine_similarity(const SparseVector& u, const SparseVector& v) {
  const double nu = squared_norm(u);
  const double nv = squared_norm(v);
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(dot(u, v) / std::sqrt(nu * nv), -1.0, 1.0);
}

inline double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& u,
                                const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double nu = u.squaredNorm();
  const double nv = v.squaredNorm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(u.dot(v) / std::sqrt(nu * nv), -1.0, 1.0);
}

}  // namespace tann
