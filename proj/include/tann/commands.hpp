#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tann/baseline.hpp"
#include "tann/clustering.hpp"
#include "tann/config.hpp"
#include "tann/dataset.hpp"
#include "tann/detail/text.hpp"
#include "tann/eval.hpp"
#include "tann/log.hpp"
#include "tann/pipeline.hpp"
#include "tann/synth.hpp"
#include "tann/textproc.hpp"

// Batch commands behind the theme_annotate CLI. Each reads its inputs from
// the configured paths and the output directory, and writes plain-text
// artifacts back into the output directory.
namespace tann::commands {

namespace fs = std::filesystem;

inline fs::path out_path(const RunConfig& cfg, const std::string& name) { return fs::path(cfg.output_dir) / name; }

inline void ensure_output_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec || !fs::is_directory(cfg.output_dir))
    throw IoError("cannot create output directory '" + cfg.output_dir + "'");
}

inline void write_manifest(const RunConfig& cfg, const std::string& command) {
  detail::write_file(out_path(cfg, "run_manifest.txt").string(), "command = " + command + "\n" + cfg.manifest());
}

inline std::vector<std::string> load_id_list(const fs::path& path) {
  const std::string content = detail::read_file(path.string());
  std::vector<std::string> ids;
  for (const auto& line : detail::content_lines(content))
    ids.emplace_back(detail::trim(line.text));
  return ids;
}

inline std::string format_id_list(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += id + "\n";
  return out;
}

inline DatasetBundle load_dataset(const RunConfig& cfg) {
  if (cfg.features.empty()) throw ConfigError("no features path configured");
  if (cfg.labels.empty()) throw ConfigError("no labels path configured");
  return make_bundle(load_features(cfg.features), load_labels(cfg.labels), Role::train);
}

inline DatasetBundle select_ids(const DatasetBundle& all, const std::vector<std::string>& ids, Role role) {
  std::vector<std::size_t> positions;
  positions.reserve(ids.size());
  for (const auto& id : ids) {
    if (!all.features.contains(id)) throw MismatchError("split manifest names unknown image id '" + id + "'");
    positions.push_back(all.features.position(id));
  }
  return sub_bundle(all, positions, role);
}

/// Splits the data and builds the vocabulary from the training side.
inline void prepare(const RunConfig& cfg) {
  cfg.validate();
  const auto all = load_dataset(cfg);
  const auto split = split_train_test(all, cfg.test_fraction, cfg.seed);
  std::optional<std::size_t> max_size;
  if (cfg.max_vocab > 0) max_size = cfg.max_vocab;
  const auto vocab = build_vocabulary(split.train.labels, cfg.min_images, max_size);
  ensure_output_dir(cfg);
  detail::write_file(out_path(cfg, "vocab.txt").string(), format_vocabulary(vocab));
  detail::write_file(out_path(cfg, "train_ids.txt").string(), format_id_list(split.train.ids()));
  detail::write_file(out_path(cfg, "test_ids.txt").string(), format_id_list(split.test.ids()));
  write_manifest(cfg, "prepare");
  log(LogLevel::info, "prepare: " + std::to_string(split.train.size()) + " train, " +
                          std::to_string(split.test.size()) + " test, vocabulary " + std::to_string(vocab.size()));
}

/// Clusters the training split into themes and prunes them to the coverage target.
inline ThemeModel cluster(const RunConfig& cfg) {
  cfg.validate();
  const auto all = load_dataset(cfg);
  const auto train = select_ids(all, load_id_list(out_path(cfg, "train_ids.txt")), Role::train);
  const auto vocab = load_vocabulary(out_path(cfg, "vocab.txt").string());
  const auto tfidf = tfidf_weights(train.labels, train.ids(), vocab);
  const auto raw = cluster_themes(tfidf, train.ids(), cfg.cutoff, cfg.linkage);
  const auto model = prune_themes(raw, cfg.coverage);
  detail::write_file(out_path(cfg, "themes.tsv").string(), format_themes(model));
  detail::write_file(out_path(cfg, "theme_stats.txt").string(), format_theme_stats(theme_stats(model)));
  write_manifest(cfg, "cluster");
  log(LogLevel::info, "cluster: " + std::to_string(raw.themes.size()) + " clusters, " +
                          std::to_string(model.themes.size()) + " themes after pruning");
  return model;
}

inline std::vector<AnnotationResult> annotate(const RunConfig& cfg, unsigned jobs) {
  cfg.validate();
  const auto all = load_dataset(cfg);
  auto train = select_ids(all, load_id_list(out_path(cfg, "train_ids.txt")), Role::train);
  const auto test = select_ids(all, load_id_list(out_path(cfg, "test_ids.txt")), Role::test);
  auto vocab = load_vocabulary(out_path(cfg, "vocab.txt").string());
  auto themes = load_themes(out_path(cfg, "themes.tsv").string());
  const AnnotationModel model(std::move(train), std::move(themes), std::move(vocab), cfg.pipeline);
  const auto results = annotate_batch(model, test, jobs);
  for (const auto& r : results)
    for (const auto& d : r.diagnostics) log(LogLevel::info, "annotate " + r.image_id + ": " + d);
  detail::write_file(out_path(cfg, "annotations.tsv").string(), format_annotations(results));

  if (!cfg.trace_image.empty()) {
    if (!test.features.contains(cfg.trace_image))
      throw ArgumentError("trace_image '" + cfg.trace_image + "' is not a test image");
    auto traced = model.config();
    traced.solver.record_trace = true;
    const auto& A = model.layer1_design().columns;
    const auto sol = solve_sgl(A, test.features.column(test.features.position(cfg.trace_image)), model.groups(),
                               traced.solver.lambda1, traced.solver.lambda2, traced.solver);
    detail::write_file(out_path(cfg, "layer1_trace.csv").string(), format_trace_csv(sol));
  }
  write_manifest(cfg, "annotate");
  log(LogLevel::info, "annotate: " + std::to_string(results.size()) + " images");
  return results;
}

inline MetricsReport evaluate(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.labels.empty()) throw ConfigError("no labels path configured");
  const auto labels = load_labels(cfg.labels);
  const auto train_ids = load_id_list(out_path(cfg, "train_ids.txt"));
  const auto test_ids = load_id_list(out_path(cfg, "test_ids.txt"));
  const auto vocab = load_vocabulary(out_path(cfg, "vocab.txt").string());
  const auto predictions = parse_annotations(detail::read_file(out_path(cfg, "annotations.tsv").string()),
                                             out_path(cfg, "annotations.tsv").string());

  LabelCorpus train_labels;
  for (const auto& id : train_ids) train_labels.entries.emplace(id, labels.words(id));
  const auto frequency = image_frequencies(train_labels);

  WordSets truth;
  for (const auto& id : test_ids) {
    auto& words = truth[id];
    for (const auto& wc : labels.words(id)) words.push_back(wc.word);
  }
  auto report = mean_metrics(confusion_counts(predictions, truth, vocab, frequency));
  report.bins = precision_frequency_bins(report.per_word, 10);
  detail::write_file(out_path(cfg, "report.txt").string(), format_report(report, test_ids.size()));
  detail::write_file(out_path(cfg, "metrics.tsv").string(), format_metrics_tsv(report.per_word));
  detail::write_file(out_path(cfg, "bins.tsv").string(), format_bins_tsv(report.bins));
  write_manifest(cfg, "evaluate");
  return report;
}

struct BaselineRun {
  RandomBaselineParams params;
  long images = 10000;
  long trials = 30;
  std::uint64_t seed = 1;
};

/// Analytic vs simulated precision/recall of the random classifier, as a text table.
inline std::string baseline(const BaselineRun& run) {
  const auto probs = analytic_probabilities(run.params);
  const auto analytic = analytic_pr(run.params);
  const auto sim = simulate_random_classifier(run.params, run.images, run.trials, run.seed);
  auto f = [](double v) { return detail::format_fixed(v); };
  std::string out;
  out += "M = " + std::to_string(run.params.M) + "  z = " + std::to_string(run.params.z) +
         "  X = " + f(run.params.X) + "  images = " + std::to_string(run.images) +
         "  trials = " + std::to_string(run.trials) + "  seed = " + std::to_string(run.seed) + "\n";
  out += "p(w) = " + f(probs.p_word) + "  p(TP) = " + f(probs.p_tp) + "  p(FP) = " + f(probs.p_fp) +
         "  p(FN) = " + f(probs.p_fn) + "\n";
  out += "metric\tanalytic\tempirical\tstd_error\n";
  out += "precision\t" + f(analytic.precision) + "\t" + f(sim.precision) + "\t" + f(sim.precision_se) + "\n";
  out += "recall\t" + (analytic.recall ? f(*analytic.recall) : std::string("undefined")) + "\t" +
         (sim.recall ? f(*sim.recall) : std::string("undefined")) + "\t" +
         (sim.recall ? f(sim.recall_se) : std::string("undefined")) + "\n";
  return out;
}

inline SynthDataset synth(const SynthParams& params, const std::string& out_dir) {
  const auto ds = generate_synthetic(params);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory '" + out_dir + "'");
  write_features((fs::path(out_dir) / "features.tsv").string(), ds.features);
  detail::write_file((fs::path(out_dir) / "labels.tsv").string(), format_labels(ds.labels, ds.features.ids()));
  detail::write_file((fs::path(out_dir) / "assignments.tsv").string(), format_assignment(ds));
  return ds;
}

}  // namespace tann::commands
