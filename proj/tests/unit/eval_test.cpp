#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "tann/eval.hpp"

namespace tann {
namespace {

Vocabulary vocab_of(std::vector<std::string> words) { return Vocabulary(std::move(words)); }

const WordCounts& row(const WordConfusion& t, const std::string& w) {
  return *std::find_if(t.begin(), t.end(), [&](const WordCounts& c) { return c.word == w; });
}

TEST(Confusion, SingleImage) {
  auto v = vocab_of({"sky", "sea", "car"});
  auto t = confusion_counts({{"i1", {"sky", "sea"}}}, {{"i1", {"sky", "car"}}}, v);
  EXPECT_EQ(row(t, "sky").tp, 1);
  EXPECT_EQ(row(t, "sea").fp, 1);
  EXPECT_EQ(row(t, "car").fn, 1);
  EXPECT_DOUBLE_EQ(row(t, "car").precision(), 0.0);
  EXPECT_DOUBLE_EQ(row(t, "car").recall(), 0.0);
}

TEST(Confusion, IgnoresOutOfVocabularyAndDuplicates) {
  auto v = vocab_of({"sky"});
  auto t = confusion_counts({{"i1", {"sky", "sky", "zebra"}}}, {{"i1", {"sky"}}}, v);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].tp, 1);
  EXPECT_EQ(t[0].fp, 0);
}

TEST(Confusion, MismatchedIds) {
  auto v = vocab_of({"sky"});
  try {
    confusion_counts({{"a", {}}, {"b", {}}}, {{"a", {}}, {"c", {}}}, v);
    FAIL();
  } catch (const KeyMismatchError& e) {
    EXPECT_NE(std::string(e.what()).find("b c"), std::string::npos);
  }
}

TEST(Confusion, MatchesPerImageEnumeration) {
  // Three images checked by enumerating every (image, word) cell.
  auto v = vocab_of({"a", "b", "c", "d"});
  WordSets pred{{"x", {"a", "b"}}, {"y", {"b", "c"}}, {"z", {}}};
  WordSets truth{{"x", {"a"}}, {"y", {"c", "d"}}, {"z", {"a", "b"}}};
  auto t = confusion_counts(pred, truth, v, {{"a", 7}});
  for (const auto& w : {"a", "b", "c", "d"}) {
    long tp = 0, fp = 0, fn = 0;
    for (const auto& [id, p] : pred) {
      const bool in_p = std::count(p.begin(), p.end(), w) > 0;
      const bool in_t = std::count(truth.at(id).begin(), truth.at(id).end(), w) > 0;
      tp += in_p && in_t;
      fp += in_p && !in_t;
      fn += !in_p && in_t;
    }
    EXPECT_EQ(row(t, w).tp, tp) << w;
    EXPECT_EQ(row(t, w).fp, fp) << w;
    EXPECT_EQ(row(t, w).fn, fn) << w;
  }
  EXPECT_EQ(row(t, "a").train_frequency, 7);
  EXPECT_EQ(row(t, "b").train_frequency, 0);
}

TEST(Confusion, AdditiveOverImages) {
  std::mt19937_64 rng(5);
  std::vector<std::string> words;
  for (int i = 0; i < 12; ++i) words.push_back("w" + std::to_string(i));
  auto v = vocab_of(words);
  for (int trial = 0; trial < 50; ++trial) {
    WordSets p1, t1, p2, t2, pall, tall;
    for (int img = 0; img < 10; ++img) {
      std::vector<std::string> p, t;
      for (const auto& w : words) {
        if (rng() % 3 == 0) p.push_back(w);
        if (rng() % 3 == 0) t.push_back(w);
      }
      const std::string id = "i" + std::to_string(img);
      (img < 5 ? p1 : p2)[id] = p;
      (img < 5 ? t1 : t2)[id] = t;
      pall[id] = p;
      tall[id] = t;
    }
    auto a = confusion_counts(p1, t1, v), b = confusion_counts(p2, t2, v), all = confusion_counts(pall, tall, v);
    for (std::size_t i = 0; i < words.size(); ++i) {
      EXPECT_EQ(all[i].tp, a[i].tp + b[i].tp);
      EXPECT_EQ(all[i].fp, a[i].fp + b[i].fp);
      EXPECT_EQ(all[i].fn, a[i].fn + b[i].fn);
    }
  }
}

WordConfusion engineered_41_42() {
  // 404 words with P = R = 1, 20 with P = 0.5 and R = 1, 576 never hit:
  // P = 0.414, R = 0.424, F = 0.41893.
  WordConfusion t;
  for (int i = 0; i < 1000; ++i) {
    WordCounts c;
    c.word = "w" + std::to_string(1000 + i);
    if (i < 404) c.tp = 1;
    else if (i < 424) c.tp = c.fp = 1;
    else c.fn = 1;
    t.push_back(c);
  }
  return t;
}

TEST(MeanMetrics, EngineeredTableRow) {
  auto r = mean_metrics(engineered_41_42());
  EXPECT_NEAR(r.mean_precision, 0.414, 1e-12);
  EXPECT_NEAR(r.mean_recall, 0.424, 1e-12);
  EXPECT_NEAR(r.mean_f, 2 * 0.414 * 0.424 / 0.838, 1e-12);
  EXPECT_EQ(std::lround(100 * r.mean_precision), 41);
  EXPECT_EQ(std::lround(100 * r.mean_recall), 42);
  EXPECT_EQ(std::lround(100 * r.mean_f), 42);
  EXPECT_EQ(r.n_plus, 424u);
}

TEST(MeanMetrics, ExactRoundedMeansGiveLowerF) {
  // P = 0.41 and R = 0.42 exactly give F = 0.41494, which rounds to 41.
  EXPECT_EQ(std::lround(100 * f_measure(0.41, 0.42)), 41);
}

TEST(MeanMetrics, FIsHarmonicMeanOfMeans) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    WordConfusion t;
    for (int i = 0; i < 30; ++i) {
      WordCounts c;
      c.word = "w" + std::to_string(i);
      c.tp = static_cast<long>(rng() % 5);
      c.fp = static_cast<long>(rng() % 5);
      c.fn = static_cast<long>(rng() % 5);
      t.push_back(c);
    }
    auto r = mean_metrics(t);
    const double P = r.mean_precision, R = r.mean_recall;
    EXPECT_NEAR(r.mean_f, P + R > 0 ? 2 * P * R / (P + R) : 0.0, 1e-12);
    std::shuffle(t.begin(), t.end(), rng);
    auto s = mean_metrics(t);
    EXPECT_NEAR(s.mean_precision, P, 1e-12);
    EXPECT_NEAR(s.mean_recall, R, 1e-12);
  }
}

TEST(MeanMetrics, AllZero) {
  WordConfusion t(4);
  auto r = mean_metrics(t);
  EXPECT_EQ(r.mean_f, 0.0);
  EXPECT_EQ(r.n_plus, 0u);
  EXPECT_THROW(mean_metrics({}), ArgumentError);
}

TEST(FrequencyBins, TwentyWordsTwoBins) {
  WordConfusion t;
  for (int i = 0; i < 20; ++i) {
    WordCounts c;
    c.word = "w" + std::to_string(100 + i);
    c.train_frequency = 20 - i;
    c.tp = i < 10 ? 0 : 1;  // the ten most frequent words are perfect
    c.fn = 1 - c.tp;
    t.push_back(c);
  }
  auto bins = precision_frequency_bins(t);
  ASSERT_EQ(bins.size(), 2u);
  EXPECT_DOUBLE_EQ(bins[0].mean_frequency, 5.5);
  EXPECT_DOUBLE_EQ(bins[0].mean_precision, 1.0);
  EXPECT_DOUBLE_EQ(bins[1].mean_frequency, 15.5);
  EXPECT_DOUBLE_EQ(bins[1].mean_precision, 0.0);
}

TEST(FrequencyBins, ShortLastBin) {
  WordConfusion t;
  for (int i = 0; i < 12; ++i) {
    WordCounts c;
    c.word = "w" + std::to_string(100 + i);
    c.train_frequency = i + 1;
    c.tp = 1;
    c.fp = i;  // precision 1/(i+1)
    t.push_back(c);
  }
  auto bins = precision_frequency_bins(t);
  ASSERT_EQ(bins.size(), 2u);
  double first = 0.0;
  for (int i = 0; i < 10; ++i) first += 1.0 / (i + 1);
  EXPECT_NEAR(bins[0].mean_precision, first / 10, 1e-15);
  EXPECT_NEAR(bins[1].mean_precision, (1.0 / 11 + 1.0 / 12) / 2, 1e-15);
  EXPECT_DOUBLE_EQ(bins[1].mean_frequency, 11.5);
}

TEST(Formatting, MetricsAndBins) {
  WordConfusion t(1);
  t[0].word = "sky";
  t[0].tp = 1;
  t[0].fp = 1;
  t[0].train_frequency = 3;
  EXPECT_EQ(format_metrics_tsv(t),
            "word\ttp\tfp\tfn\tprecision\trecall\tfrequency\nsky\t1\t1\t0\t0.500000\t1.000000\t3\n");
  EXPECT_EQ(format_bins_tsv({{3.0, 0.5}}), "mean_frequency\tmean_precision\n3.000000\t0.500000\n");
}

}  // namespace
}  // namespace tann
