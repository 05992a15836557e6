#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "tann/pipeline.hpp"
#include "tann/synth.hpp"

namespace tann {
namespace {

struct Fixture {
  SynthDataset data;
  DatasetBundle train;
  ThemeModel themes;
  Vocabulary vocab;
};

// Planted themes used directly as the theme model.
Fixture make_fixture(int themes = 4, int per_theme = 10, std::uint64_t seed = 3) {
  SynthParams p;
  p.themes = themes;
  p.images_per_theme = per_theme;
  p.dim = 32;
  p.seed = seed;
  Fixture f;
  f.data = generate_synthetic(p);
  f.train = make_bundle(f.data.features, f.data.labels, Role::train);
  f.themes.themes.resize(static_cast<std::size_t>(themes));
  for (std::size_t i = 0; i < f.train.size(); ++i)
    f.themes.themes[static_cast<std::size_t>(f.data.assignment[i])].push_back(f.train.ids()[i]);
  f.vocab = build_vocabulary(f.train.labels);
  return f;
}

AnnotationModel model_of(const Fixture& f, PipelineConfig cfg = {}) {
  return AnnotationModel(f.train, f.themes, f.vocab, cfg);
}

TEST(SelectThemes, TrainingImageSelectsItsOwnTheme) {
  auto f = make_fixture();
  auto model = model_of(f);
  for (std::size_t i = 0; i < f.train.size(); i += 7) {
    auto sel = select_themes(model, f.train.features.column(i));
    EXPECT_EQ(sel.fallback, SelectionFallback::none);
    ASSERT_FALSE(sel.selected_theme_indices.empty());
    EXPECT_NE(std::find(sel.selected_theme_indices.begin(), sel.selected_theme_indices.end(),
                        static_cast<std::size_t>(f.data.assignment[i])),
              sel.selected_theme_indices.end());
  }
}

TEST(SelectThemes, MixtureSelectsBothThemes) {
  auto f = make_fixture();
  auto model = model_of(f);
  Vector mix = 0.5 * (model.theme_mean(0) + model.theme_mean(2));
  auto sel = select_themes(model, mix);
  std::set<std::size_t> chosen(sel.selected_theme_indices.begin(), sel.selected_theme_indices.end());
  EXPECT_TRUE(chosen.count(0));
  EXPECT_TRUE(chosen.count(2));
}

TEST(SelectThemes, ActiveImagesAndCandidatesAreConsistent) {
  auto f = make_fixture();
  auto model = model_of(f);
  auto sel = select_themes(model, f.train.features.column(3));
  std::set<std::string> members;
  for (auto k : sel.selected_theme_indices) members.insert(f.themes.themes[k].begin(), f.themes.themes[k].end());
  std::set<std::string> words;
  for (const auto& id : sel.active_image_ids) {
    EXPECT_TRUE(members.count(id)) << id;
    for (const auto& wc : f.train.labels.words(id)) words.insert(wc.word);
  }
  EXPECT_EQ(std::set<std::string>(sel.candidate_words.begin(), sel.candidate_words.end()), words);
}

TEST(SelectThemes, AllThemeMembersOption) {
  auto f = make_fixture();
  PipelineConfig cfg;
  cfg.all_theme_members = true;
  auto model = model_of(f, cfg);
  auto sel = select_themes(model, f.train.features.column(0));
  std::size_t expected = 0;
  for (auto k : sel.selected_theme_indices) expected += f.themes.themes[k].size();
  EXPECT_EQ(sel.active_image_ids.size(), expected);
}

TEST(SelectThemes, FallsBackToNearestThemeMean) {
  auto f = make_fixture();
  PipelineConfig cfg;
  cfg.solver.lambda2 = 1e9;
  cfg.fallback_halvings = 2;
  auto model = model_of(f, cfg);
  auto sel = select_themes(model, f.train.features.column(25));
  EXPECT_EQ(sel.fallback, SelectionFallback::nearest_theme_mean);
  ASSERT_EQ(sel.selected_theme_indices.size(), 1u);
  EXPECT_EQ(sel.selected_theme_indices[0], static_cast<std::size_t>(f.data.assignment[25]));
  EXPECT_EQ(sel.active_image_ids.size(), f.themes.themes[sel.selected_theme_indices[0]].size());
}

TEST(SelectThemes, HalvingRecoversSelection) {
  auto f = make_fixture();
  const Vector x = f.train.features.column(5);
  // Unit-norm columns give ||2 A_k^T x|| <= 2 sqrt(p) ||x||, so this zeroes every group at w = 0.
  const double p = static_cast<double>(f.train.size());
  const double big = 4.0 * std::sqrt(p) * x.norm();
  PipelineConfig cfg;
  cfg.solver.lambda2 = big;
  cfg.fallback_halvings = 60;
  auto sel = select_themes(model_of(f, cfg), x);
  EXPECT_EQ(sel.fallback, SelectionFallback::halved_lambda2);
  EXPECT_GT(sel.halvings, 0);
  EXPECT_LT(sel.lambda2_used, big);
}

TEST(SelectThemes, RejectsWrongDimension) {
  auto f = make_fixture();
  auto model = model_of(f);
  EXPECT_THROW(select_themes(model, Vector::Ones(5)), ShapeError);
}

TEST(ScoreWord, SelfReconstructionScoresNearOne) {
  auto f = make_fixture();
  auto model = model_of(f);
  for (std::size_t i = 0; i < f.train.size(); i += 5) {
    const Vector x = f.train.features.column(i);
    auto sel = select_themes(model, x);
    const auto& own = f.train.labels.words(f.train.ids()[i]);
    for (const auto& wc : own) {
      if (std::find(sel.candidate_words.begin(), sel.candidate_words.end(), wc.word) == sel.candidate_words.end())
        continue;
      EXPECT_GE(score_word(model, x, wc.word, sel), 0.99) << wc.word;
    }
  }
}

TEST(ScoreWord, FullShrinkageScoresMinusOne) {
  auto f = make_fixture();
  PipelineConfig cfg;
  auto model = model_of(f, cfg);
  const Vector x = f.train.features.column(0);
  auto sel = select_themes(model, x);
  cfg.solver.rho = 1e9;
  auto shrunk = model_of(f, cfg);
  SparseSolution sol;
  EXPECT_EQ(score_word(shrunk, x, sel.candidate_words.front(), sel, &sol), -1.0);
  EXPECT_TRUE(sol.w.isZero(0.0));
}

TEST(ScoreWord, RejectsNonCandidate) {
  auto f = make_fixture();
  auto model = model_of(f);
  auto sel = select_themes(model, f.train.features.column(0));
  EXPECT_THROW(score_word(model, f.train.features.column(0), "no_such_word", sel), WordNotCandidateError);
}

TEST(ScoreWord, PredictorsComeFromActiveImages) {
  auto f = make_fixture();
  auto model = model_of(f);
  auto sel = select_themes(model, f.train.features.column(12));
  std::set<std::size_t> active(sel.active_positions.begin(), sel.active_positions.end());
  for (const auto& w : sel.candidate_words) {
    auto preds = word_predictors(model, sel, w);
    EXPECT_FALSE(preds.empty());
    for (auto p : preds) {
      EXPECT_TRUE(active.count(p));
      const auto& words = f.train.labels.words(f.train.ids()[p]);
      EXPECT_TRUE(std::any_of(words.begin(), words.end(), [&](const WordCount& wc) { return wc.word == w; }));
    }
  }
}

TEST(Annotate, SizeIsMinOfBAndCandidates) {
  auto f = make_fixture();
  for (std::size_t B : {1u, 3u, 5u, 50u}) {
    PipelineConfig cfg;
    cfg.B = B;
    auto model = model_of(f, cfg);
    for (std::size_t i = 0; i < f.train.size(); i += 9) {
      auto r = annotate(model, f.train.features.column(i), f.train.ids()[i]);
      EXPECT_EQ(r.annotations.size(), std::min(B, r.theme_selection.candidate_words.size()));
      for (std::size_t k = 1; k < r.annotations.size(); ++k) {
        const auto& a = r.annotations[k - 1];
        const auto& b = r.annotations[k];
        EXPECT_TRUE(a.second > b.second || (a.second == b.second && a.first < b.first));
      }
      for (const auto& [w, s] : r.annotations)
        EXPECT_NE(std::find(r.theme_selection.candidate_words.begin(), r.theme_selection.candidate_words.end(), w),
                  r.theme_selection.candidate_words.end());
    }
  }
}

TEST(Annotate, TrainingImageGetsItsOwnWords) {
  auto f = make_fixture();
  PipelineConfig cfg;
  cfg.B = 5;
  auto model = model_of(f, cfg);
  for (std::size_t i = 0; i < f.train.size(); i += 3) {
    auto r = annotate(model, f.train.features.column(i), f.train.ids()[i]);
    std::set<std::string> got;
    for (const auto& [w, s] : r.annotations) got.insert(w);
    for (const auto& wc : f.train.labels.words(f.train.ids()[i])) EXPECT_TRUE(got.count(wc.word)) << wc.word;
  }
}

TEST(AnnotateBatch, IndependentOfJobs) {
  auto f = make_fixture();
  auto model = model_of(f);
  auto base = make_bundle(f.data.features, f.data.labels, Role::test);
  const auto one = format_annotations(annotate_batch(model, base, 1));
  EXPECT_EQ(format_annotations(annotate_batch(model, base, 4)), one);
  EXPECT_EQ(format_annotations(annotate_batch(model, base, 1)), one);
}

TEST(AnnotationsFile, RoundTrip) {
  AnnotationResult r;
  r.image_id = "img1";
  r.annotations = {{"sky", 0.9}, {"sea", -0.25}};
  AnnotationResult empty;
  empty.image_id = "img2";
  const auto text = format_annotations({r, empty});
  EXPECT_EQ(text, "img1\tsky:0.900000 sea:-0.250000\nimg2\t\n");
  auto back = parse_annotations(text);
  EXPECT_EQ(back.at("img1"), (std::vector<std::string>{"sky", "sea"}));
  EXPECT_TRUE(back.at("img2").empty());
  EXPECT_THROW(parse_annotations("a\tsky\n"), FormatError);
  EXPECT_THROW(parse_annotations("a\t\na\t\n"), FormatError);
}

TEST(AnnotationModel, RejectsUnknownThemeMember) {
  auto f = make_fixture();
  f.themes.themes[0].push_back("ghost");
  EXPECT_THROW(model_of(f), MismatchError);
}

}  // namespace
}  // namespace tann
