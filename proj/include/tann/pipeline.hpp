#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tann/clustering.hpp"
#include "tann/dataset.hpp"
#include "tann/detail/text.hpp"
#include "tann/errors.hpp"
#include "tann/solvers.hpp"
#include "tann/textproc.hpp"

namespace tann {

struct PipelineConfig {
  SolverConfig solver;
  std::size_t B = 5;
  double epsilon_group = 1e-8;
  bool all_theme_members = false;
  int fallback_halvings = 6;

  void validate() const {
    solver.validate();
    if (B < 1) throw ArgumentError("B must be >= 1");
    if (!(epsilon_group >= 0.0)) throw ArgumentError("epsilon_group must be nonnegative");
    if (fallback_halvings < 0) throw ArgumentError("fallback_halvings must be nonnegative");
  }
};

enum class SelectionFallback { none, halved_lambda2, nearest_theme_mean };

struct ThemeSelection {
  std::vector<std::size_t> selected_theme_indices;
  std::vector<std::string> active_image_ids;  // J^I, layer-1 column order
  std::vector<std::string> candidate_words;   // W^I, vocabulary order
  SparseSolution layer1_solution;
  SelectionFallback fallback = SelectionFallback::none;
  int halvings = 0;
  double lambda2_used = 0.0;

  std::vector<std::size_t> active_positions;  // training positions of J^I
};

struct AnnotationResult {
  std::string image_id;
  ThemeSelection theme_selection;
  std::map<std::string, double> word_scores;
  std::vector<std::pair<std::string, double>> annotations;  // V^I, score desc then word asc
  std::vector<std::string> diagnostics;
};

/**
 * Training-side state shared by every test image: the layer-1 design matrix
 * with theme-contiguous columns, the group structure over it, and the
 * in-vocabulary words of every training image. Immutable after construction.
 */
class AnnotationModel {
 public:
  AnnotationModel(DatasetBundle train, ThemeModel themes, Vocabulary vocab, PipelineConfig cfg)
      : train_(std::move(train)), themes_(std::move(themes)), vocab_(std::move(vocab)), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (themes_.themes.empty()) throw ArgumentError("theme model has no themes");

    std::vector<std::size_t> sizes;
    for (const auto& theme : themes_.themes) {
      if (theme.empty()) throw ArgumentError("theme model contains an empty theme");
      sizes.push_back(theme.size());
      Vector mean = Vector::Zero(static_cast<Eigen::Index>(train_.features.dim()));
      for (const auto& id : theme) {
        if (!train_.features.contains(id))
          throw MismatchError("theme member '" + id + "' is not in the training set");
        const auto pos = train_.features.position(id);
        column_position_.push_back(pos);
        mean += train_.features.column(pos);
      }
      theme_means_.push_back(mean / static_cast<double>(theme.size()));
    }
    Matrix cols(static_cast<Eigen::Index>(train_.features.dim()), static_cast<Eigen::Index>(column_position_.size()));
    std::vector<std::string> ids;
    for (std::size_t c = 0; c < column_position_.size(); ++c) {
      cols.col(static_cast<Eigen::Index>(c)) = train_.features.column(column_position_[c]);
      ids.push_back(train_.ids()[column_position_[c]]);
    }
    layer1_ = make_design_matrix(std::move(cols), std::move(ids), cfg_.solver.normalize);
    groups_ = GroupStructure::from_sizes(sizes, 1.0);

    image_words_.resize(train_.size());
    for (std::size_t pos = 0; pos < train_.size(); ++pos) {
      for (const auto& wc : train_.labels.words(train_.ids()[pos]))
        if (auto i = vocab_.find(wc.word)) image_words_[pos].push_back(*i);
      std::sort(image_words_[pos].begin(), image_words_[pos].end());
    }
  }

  const DatasetBundle& train() const { return train_; }
  const ThemeModel& themes() const { return themes_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const PipelineConfig& config() const { return cfg_; }
  const DesignMatrix& layer1_design() const { return layer1_; }
  const GroupStructure& groups() const { return groups_; }
  std::size_t column_position(std::size_t column) const { return column_position_.at(column); }
  const Vector& theme_mean(std::size_t theme) const { return theme_means_.at(theme); }
  const std::vector<std::size_t>& words_of(std::size_t position) const { return image_words_.at(position); }

  void check_feature(const VectorRef& feature) const {
    if (static_cast<std::size_t>(feature.size()) != train_.features.dim())
      throw ShapeError("test feature has dimension " + std::to_string(feature.size()) + ", training data has " +
                       std::to_string(train_.features.dim()));
    if (!feature.allFinite()) throw ShapeError("test feature contains non-finite values");
  }

 private:
  DatasetBundle train_;
  ThemeModel themes_;
  Vocabulary vocab_;
  PipelineConfig cfg_;
  DesignMatrix layer1_;
  GroupStructure groups_;
  std::vector<std::size_t> column_position_;  // layer-1 column -> training position
  std::vector<Vector> theme_means_;
  std::vector<std::vector<std::size_t>> image_words_;  // training position -> vocabulary indices
};

namespace detail {

inline void fill_candidates(const AnnotationModel& model, ThemeSelection& sel) {
  std::set<std::size_t> words;
  for (auto pos : sel.active_positions) {
    sel.active_image_ids.push_back(model.train().ids()[pos]);
    for (auto w : model.words_of(pos)) words.insert(w);
  }
  for (auto w : words) sel.candidate_words.push_back(model.vocabulary().word(w));
}

}  // namespace detail

/**
 * Layer 1: codes the test feature over all retained training images with the
 * sparse group lasso and keeps the themes whose coefficient block has norm
 * above epsilon_group. J^I holds the images of those themes with a nonzero
 * coefficient (or every member, with all_theme_members).
 *
 * If no block survives, lambda2 is halved and the problem re-solved, up to
 * fallback_halvings times; after that the theme whose mean feature is most
 * cosine-similar to the test feature is taken with all its members.
 */
inline ThemeSelection select_themes(const AnnotationModel& model, const VectorRef& feature) {
  model.check_feature(feature);
  const auto& cfg = model.config();
  const auto& A = model.layer1_design().columns;
  const auto& groups = model.groups();

  ThemeSelection sel;
  double lambda2 = cfg.solver.lambda2;
  for (int attempt = 0; attempt <= cfg.fallback_halvings; ++attempt) {
    sel.layer1_solution = solve_sgl(A, feature, groups, cfg.solver.lambda1, lambda2, cfg.solver);
    sel.lambda2_used = lambda2;
    sel.halvings = attempt;
    const auto& w = sel.layer1_solution.w;
    for (std::size_t k = 0; k < groups.groups.size(); ++k) {
      const auto& grp = groups.groups[k];
      if (w.segment(grp.begin, grp.size()).norm() <= cfg.epsilon_group) continue;
      sel.selected_theme_indices.push_back(k);
      for (Eigen::Index c = grp.begin; c < grp.end; ++c)
        if (cfg.all_theme_members || std::abs(w[c]) > cfg.epsilon_group)
          sel.active_positions.push_back(model.column_position(static_cast<std::size_t>(c)));
    }
    if (!sel.selected_theme_indices.empty()) {
      sel.fallback = attempt == 0 ? SelectionFallback::none : SelectionFallback::halved_lambda2;
      detail::fill_candidates(model, sel);
      return sel;
    }
    lambda2 *= 0.5;
  }

  sel.fallback = SelectionFallback::nearest_theme_mean;
  std::size_t best = 0;
  double best_sim = -2.0;
  for (std::size_t k = 0; k < groups.groups.size(); ++k) {
    const double s = cosine_similarity(model.theme_mean(k), feature);
    if (s > best_sim) {
      best_sim = s;
      best = k;
    }
  }
  sel.selected_theme_indices.push_back(best);
  for (Eigen::Index c = groups.groups[best].begin; c < groups.groups[best].end; ++c)
    sel.active_positions.push_back(model.column_position(static_cast<std::size_t>(c)));
  detail::fill_candidates(model, sel);
  return sel;
}

/// Images of J^I carrying `word`, i.e. the predictor set for that word.
inline std::vector<std::size_t> word_predictors(const AnnotationModel& model, const ThemeSelection& selection,
                                                const std::string& word) {
  const auto index = model.vocabulary().find(word);
  std::vector<std::size_t> out;
  if (!index) return out;
  for (auto pos : selection.active_positions) {
    const auto& words = model.words_of(pos);
    if (std::binary_search(words.begin(), words.end(), *index)) out.push_back(pos);
  }
  return out;
}

/**
 * Layer 2 score of one candidate word: lasso-codes the test feature over the
 * word's predictor images and returns the cosine between the reconstruction
 * and the feature. An all-zero code scores -1.
 */
inline double score_word(const AnnotationModel& model, const VectorRef& feature, const std::string& word,
                         const ThemeSelection& selection, SparseSolution* solution_out = nullptr) {
  model.check_feature(feature);
  const auto& candidates = selection.candidate_words;
  if (std::find(candidates.begin(), candidates.end(), word) == candidates.end())
    throw WordNotCandidateError("word '" + word + "' is not a candidate for this image");
  const auto predictors = word_predictors(model, selection, word);
  if (predictors.empty()) throw WordNotCandidateError("word '" + word + "' has no predictor images");

  const auto& features = model.train().features;
  Matrix cols(static_cast<Eigen::Index>(features.dim()), static_cast<Eigen::Index>(predictors.size()));
  for (std::size_t c = 0; c < predictors.size(); ++c)
    cols.col(static_cast<Eigen::Index>(c)) = features.column(predictors[c]);
  const auto design = make_design_matrix(std::move(cols), {}, model.config().solver.normalize);

  auto sol = solve_lasso(design.columns, feature, model.config().solver.rho, model.config().solver);
  double score = -1.0;
  if (!(sol.w.array() == 0.0).all()) score = cosine_similarity(design.columns * sol.w, feature);
  if (solution_out) *solution_out = std::move(sol);
  return score;
}

/// Both layers for one image; V^I is the top-B candidates by score (ties: word ascending).
inline AnnotationResult annotate(const AnnotationModel& model, const VectorRef& feature, const std::string& image_id) {
  AnnotationResult result;
  result.image_id = image_id;
  result.theme_selection = select_themes(model, feature);
  const auto& sel = result.theme_selection;
  if (sel.fallback == SelectionFallback::halved_lambda2)
    result.diagnostics.push_back("layer 1 selected no theme; lambda2 halved " + std::to_string(sel.halvings) +
                                 " time(s)");
  if (sel.fallback == SelectionFallback::nearest_theme_mean)
    result.diagnostics.push_back("layer 1 selected no theme; fell back to nearest theme mean");
  if (!sel.layer1_solution.converged) result.diagnostics.push_back("layer 1 solver did not converge");

  int unconverged = 0;
  std::vector<std::pair<std::string, double>> ranked;
  for (const auto& word : sel.candidate_words) {
    SparseSolution sol;
    const double s = score_word(model, feature, word, sel, &sol);
    if (!sol.converged) ++unconverged;
    result.word_scores.emplace(word, s);
    ranked.emplace_back(word, s);
  }
  if (unconverged > 0)
    result.diagnostics.push_back(std::to_string(unconverged) + " layer 2 solve(s) did not converge");
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > model.config().B) ranked.resize(model.config().B);
  result.annotations = std::move(ranked);
  return result;
}

/**
 * Annotates every image of `test` with up to `jobs` worker threads. Output
 * order is input order; a failure on one image is recorded in its
 * diagnostics and leaves its annotation list empty.
 */
inline std::vector<AnnotationResult> annotate_batch(const AnnotationModel& model, const DatasetBundle& test,
                                                    unsigned jobs = 1) {
  if (test.size() > 0 && test.features.dim() != model.train().features.dim())
    throw ShapeError("test features have dimension " + std::to_string(test.features.dim()) +
                     ", training features have " + std::to_string(model.train().features.dim()));
  std::vector<AnnotationResult> results(test.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < results.size(); i = next++) {
      const auto& id = test.ids()[i];
      try {
        results[i] = annotate(model, test.features.column(i), id);
      } catch (const std::exception& e) {
        results[i] = AnnotationResult{};
        results[i].image_id = id;
        results[i].diagnostics.push_back(std::string("annotation failed: ") + e.what());
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(results.size(), 1))));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

inline std::string format_annotations(const std::vector<AnnotationResult>& results) {
  std::string out;
  for (const auto& r : results) {
    out += r.image_id;
    out += '\t';
    for (std::size_t i = 0; i < r.annotations.size(); ++i) {
      if (i) out += ' ';
      out += r.annotations[i].first + ":" + detail::format_fixed(r.annotations[i].second);
    }
    out += '\n';
  }
  return out;
}

/// Predicted word sets keyed by image id, read back from annotations.tsv.
inline std::map<std::string, std::vector<std::string>> parse_annotations(std::string_view content,
                                                                         const std::string& origin = "<annotations>") {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& line : detail::content_lines(content)) {
    auto tab = line.text.find('\t');
    std::string id(detail::trim(line.text.substr(0, tab)));
    if (id.empty()) throw FormatError(origin + ":" + std::to_string(line.number) + ": empty image id");
    std::vector<std::string> words;
    if (tab != std::string_view::npos) {
      for (auto tok : detail::split_ws(line.text.substr(tab + 1))) {
        auto colon = tok.rfind(':');
        double score = 0.0;
        if (colon == std::string_view::npos || colon == 0 || !detail::parse_double(tok.substr(colon + 1), score))
          throw FormatError(origin + ":" + std::to_string(line.number) + ": expected '<word>:<score>', got '" +
                            std::string(tok) + "'");
        words.emplace_back(tok.substr(0, colon));
      }
    }
    if (!out.emplace(id, std::move(words)).second)
      throw FormatError(origin + ":" + std::to_string(line.number) + ": duplicate image id '" + id + "'");
  }
  return out;
}

}  // namespace tann
