#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tann/detail/text.hpp"
#include "tann/errors.hpp"

namespace tann {

/**
 * N opaque feature vectors of dimension `dim`, one per image.
 *
 * Stored column-major: column j holds the features of image ids()[j], so a
 * subset of columns can be handed straight to the solvers as a design matrix.
 */
class FeatureMatrix {
 public:
  FeatureMatrix() = default;

  FeatureMatrix(std::vector<std::string> ids, Eigen::MatrixXd columns)
      : ids_(std::move(ids)), values_(std::move(columns)) {
    if (ids_.empty()) throw FormatError("feature matrix has no rows");
    if (static_cast<std::size_t>(values_.cols()) != ids_.size())
      throw ShapeError("feature matrix: id count does not match column count");
    if (values_.rows() < 1) throw FormatError("feature dimension must be positive");
    if (!values_.allFinite()) throw FormatError("feature matrix contains non-finite values");
    for (std::size_t j = 0; j < ids_.size(); ++j) {
      if (!index_.emplace(ids_[j], j).second)
        throw FormatError("duplicate image id '" + ids_[j] + "'");
    }
  }

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(values_.rows()); }
  const std::vector<std::string>& ids() const { return ids_; }
  const Eigen::MatrixXd& values() const { return values_; }

  Eigen::VectorXd row(std::size_t j) const { return values_.col(static_cast<Eigen::Index>(j)); }
  auto column(std::size_t j) const { return values_.col(static_cast<Eigen::Index>(j)); }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  std::size_t position(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw KeyMismatchError("unknown image id '" + id + "'");
    return it->second;
  }

  // Rows at the given positions, in the given order.
  FeatureMatrix subset(const std::vector<std::size_t>& positions) const {
    std::vector<std::string> ids;
    Eigen::MatrixXd cols(values_.rows(), static_cast<Eigen::Index>(positions.size()));
    for (std::size_t k = 0; k < positions.size(); ++k) {
      ids.push_back(ids_.at(positions[k]));
      cols.col(static_cast<Eigen::Index>(k)) = values_.col(static_cast<Eigen::Index>(positions[k]));
    }
    return FeatureMatrix(std::move(ids), std::move(cols));
  }

 private:
  std::vector<std::string> ids_;
  Eigen::MatrixXd values_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct WordCount {
  std::string word;
  int count = 1;
  friend bool operator==(const WordCount&, const WordCount&) = default;
};

/// Per-image word multiset. Words keep first-appearance order within an image.
struct LabelCorpus {
  std::map<std::string, std::vector<WordCount>> entries;

  bool contains(const std::string& id) const { return entries.count(id) != 0; }
  const std::vector<WordCount>& words(const std::string& id) const {
    static const std::vector<WordCount> empty;
    auto it = entries.find(id);
    return it == entries.end() ? empty : it->second;
  }
};

enum class Role { train, test };

/// Features and labels over the same id set, in feature order.
struct DatasetBundle {
  FeatureMatrix features;
  LabelCorpus labels;
  Role role = Role::train;

  std::size_t size() const { return features.size(); }
  const std::vector<std::string>& ids() const { return features.ids(); }
};

namespace detail {

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string at_line(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

}  // namespace detail

/// Parses features TSV text; `origin` only labels error messages.
inline FeatureMatrix parse_features(std::string_view content, const std::string& origin = "<features>") {
  std::vector<std::string> ids;
  std::vector<double> flat;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t dim = 0;
  for (const auto& line : detail::content_lines(content)) {
    auto tab = line.text.find('\t');
    if (tab == std::string_view::npos)
      throw FormatError(detail::at_line(origin, line.number) + "expected '<id>\\t<values>'");
    std::string id(detail::trim(line.text.substr(0, tab)));
    if (id.empty()) throw FormatError(detail::at_line(origin, line.number) + "empty image id");
    auto tokens = detail::split_ws(line.text.substr(tab + 1));
    if (tokens.empty()) throw FormatError(detail::at_line(origin, line.number) + "no feature values");
    if (dim == 0) dim = tokens.size();
    if (tokens.size() != dim)
      throw FormatError(detail::at_line(origin, line.number) + "expected " + std::to_string(dim) +
                        " values, found " + std::to_string(tokens.size()));
    for (auto tok : tokens) {
      double v = 0.0;
      if (!detail::parse_double(tok, v) || !std::isfinite(v))
        throw FormatError(detail::at_line(origin, line.number) + "invalid or non-finite value '" +
                          std::string(tok) + "'");
      flat.push_back(v);
    }
    if (!seen.emplace(id, line.number).second)
      throw FormatError(detail::at_line(origin, line.number) + "duplicate image id '" + id + "'");
    ids.push_back(std::move(id));
  }
  if (ids.empty()) throw FormatError(origin + ": no rows");
  Eigen::MatrixXd cols = Eigen::Map<Eigen::MatrixXd>(flat.data(), static_cast<Eigen::Index>(dim),
                                                     static_cast<Eigen::Index>(ids.size()));
  return FeatureMatrix(std::move(ids), std::move(cols));
}

inline FeatureMatrix load_features(const std::string& path) {
  return parse_features(detail::read_file(path), path);
}

inline std::string format_features(const FeatureMatrix& fm) {
  std::string out;
  for (std::size_t j = 0; j < fm.size(); ++j) {
    out += fm.ids()[j];
    out += '\t';
    auto col = fm.column(j);
    for (Eigen::Index r = 0; r < col.size(); ++r) {
      if (r) out += ' ';
      out += detail::format_roundtrip(col[r]);
    }
    out += '\n';
  }
  return out;
}

inline void write_features(const std::string& path, const FeatureMatrix& fm) {
  detail::write_file(path, format_features(fm));
}

inline LabelCorpus parse_labels(std::string_view content, const std::string& origin = "<labels>") {
  LabelCorpus corpus;
  for (const auto& line : detail::content_lines(content)) {
    auto tab = line.text.find('\t');
    std::string id(detail::trim(line.text.substr(0, tab)));
    if (id.empty()) throw FormatError(detail::at_line(origin, line.number) + "empty image id");
    std::vector<WordCount> words;
    if (tab != std::string_view::npos) {
      for (auto tok : detail::split_ws(line.text.substr(tab + 1))) {
        std::string_view word = tok;
        int count = 1;
        if (auto colon = tok.rfind(':'); colon != std::string_view::npos) {
          word = tok.substr(0, colon);
          auto count_text = tok.substr(colon + 1);
          if (!detail::parse_int(count_text, count) || count < 1)
            throw FormatError(detail::at_line(origin, line.number) + "invalid count in '" +
                              std::string(tok) + "' (must be an integer >= 1)");
        }
        if (word.empty())
          throw FormatError(detail::at_line(origin, line.number) + "empty word in '" + std::string(tok) + "'");
        std::string w = detail::lowercase(word);
        auto it = std::find_if(words.begin(), words.end(), [&](const WordCount& wc) { return wc.word == w; });
        if (it == words.end())
          words.push_back({std::move(w), count});
        else
          it->count += count;
      }
    }
    if (!corpus.entries.emplace(id, std::move(words)).second)
      throw FormatError(detail::at_line(origin, line.number) + "duplicate image id '" + id + "'");
  }
  return corpus;
}

inline LabelCorpus load_labels(const std::string& path) { return parse_labels(detail::read_file(path), path); }

inline std::string format_labels(const LabelCorpus& corpus, const std::vector<std::string>& order) {
  std::string out;
  for (const auto& id : order) {
    out += id;
    out += '\t';
    bool first = true;
    for (const auto& wc : corpus.words(id)) {
      if (!first) out += ' ';
      first = false;
      out += wc.word;
      if (wc.count != 1) out += ":" + std::to_string(wc.count);
    }
    out += '\n';
  }
  return out;
}

/**
 * Joins features and labels. Train bundles require identical id sets; test
 * bundles give unlabeled images an empty word list and ignore labels for ids
 * without features.
 */
inline DatasetBundle make_bundle(FeatureMatrix features, const LabelCorpus& labels, Role role) {
  DatasetBundle bundle;
  bundle.role = role;
  std::vector<std::string> missing;
  for (const auto& id : features.ids()) {
    if (labels.contains(id))
      bundle.labels.entries.emplace(id, labels.words(id));
    else if (role == Role::test)
      bundle.labels.entries.emplace(id, std::vector<WordCount>{});
    else
      missing.push_back(id);
  }
  if (role == Role::train) {
    for (const auto& [id, words] : labels.entries)
      if (!features.contains(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    std::string msg = "id sets of features and labels differ; missing:";
    for (const auto& id : missing) msg += " " + id;
    throw MismatchError(msg);
  }
  bundle.features = std::move(features);
  return bundle;
}

inline DatasetBundle sub_bundle(const DatasetBundle& bundle, const std::vector<std::size_t>& positions, Role role) {
  DatasetBundle out;
  out.role = role;
  out.features = bundle.features.subset(positions);
  for (const auto& id : out.features.ids()) out.labels.entries.emplace(id, bundle.labels.words(id));
  return out;
}

namespace detail {

// Unbiased integer in [0, bound) from a 64-bit engine, identical on every platform
// (std::uniform_int_distribution is implementation-defined).
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = 0;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace detail

struct TrainTestSplit {
  DatasetBundle train;
  DatasetBundle test;
};

/// Positions (ascending) that go to the test side for a split of `n` items.
inline std::vector<std::size_t> split_positions(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ArgumentError("test_fraction must lie in (0,1), got " + detail::format_roundtrip(test_fraction));
  if (n < 2) throw ArgumentError("cannot split fewer than 2 images");
  auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  k = std::max<std::size_t>(k, 1);
  if (k >= n) throw ArgumentError("test_fraction leaves no training images");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  detail::shuffle(perm, rng);
  perm.resize(k);
  std::sort(perm.begin(), perm.end());
  return perm;
}

/// Uniform random split; both sides keep the input row order.
inline TrainTestSplit split_train_test(const DatasetBundle& bundle, double test_fraction, std::uint64_t seed) {
  auto test_pos = split_positions(bundle.size(), test_fraction, seed);
  std::vector<std::size_t> train_pos;
  std::size_t t = 0;
  for (std::size_t i = 0; i < bundle.size(); ++i) {
    if (t < test_pos.size() && test_pos[t] == i)
      ++t;
    else
      train_pos.push_back(i);
  }
  return {sub_bundle(bundle, train_pos, Role::train), sub_bundle(bundle, test_pos, Role::test)};
}

}  // namespace tann
