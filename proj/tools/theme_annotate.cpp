// theme_annotate: batch front end for the two-layer theme/word annotator.
//
//   theme_annotate synth    --out DIR [generator options]
//   theme_annotate prepare  --config run.cfg [--key value ...]
//   theme_annotate cluster  --config run.cfg
//   theme_annotate annotate --config run.cfg --jobs 8
//   theme_annotate evaluate --config run.cfg
//   theme_annotate baseline -M 291 -z 5 -X 0.1
//
// Exit codes: 0 success, 2 usage/config error, 3 data error.

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "tann/commands.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

std::string flag_for(const std::string& key) {
  if (key.size() == 1) return "-" + key;
  std::string flag = "--" + key;
  std::replace(flag.begin(), flag.end(), '_', '-');
  return flag;
}

// Config-file path plus per-key overrides shared by the pipeline subcommands.
struct PipelineOptions {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  unsigned jobs = 1;

  void attach(CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "flat key = value configuration file");
    sub->add_option("-j,--jobs", jobs, "worker threads for annotation (output does not depend on it)")
        ->check(CLI::PositiveNumber);
    for (const auto& key : tann::RunConfig{}.keys()) {
      std::string name = flag_for(key);
      if (key == "output_dir") name = "-o,--out," + name;
      sub->add_option_function<std::string>(
          name, [this, key](const std::string& v) { overrides[key] = v; }, "override config key '" + key + "'");
    }
  }

  tann::RunConfig resolve() const {
    tann::RunConfig cfg;
    if (!config_path.empty()) cfg = tann::load_config(config_path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-layer sparse-coding image annotation (themes, then words)"};
  app.require_subcommand(1);

  PipelineOptions opts;
  auto* prepare = app.add_subcommand("prepare", "split the data and build the vocabulary");
  auto* cluster = app.add_subcommand("cluster", "group training images into themes");
  auto* annotate = app.add_subcommand("annotate", "annotate the test split");
  auto* evaluate = app.add_subcommand("evaluate", "score annotations against ground truth");
  for (auto* sub : {prepare, cluster, annotate, evaluate}) opts.attach(sub);

  tann::commands::BaselineRun baseline_run;
  baseline_run.params = {291, 5, 0.1};
  auto* baseline = app.add_subcommand("baseline", "random-classifier precision/recall, analytic vs simulated");
  baseline->add_option("-M,--vocab-size", baseline_run.params.M, "vocabulary size")->capture_default_str();
  baseline->add_option("-z,--labels-per-image", baseline_run.params.z, "labels assigned per image")
      ->capture_default_str();
  baseline->add_option("-X,--true-fraction", baseline_run.params.X, "fraction of images truly carrying the word")
      ->capture_default_str();
  baseline->add_option("--images", baseline_run.images, "simulated images per trial")->capture_default_str();
  baseline->add_option("--trials", baseline_run.trials, "simulation trials")->capture_default_str();
  baseline->add_option("--seed", baseline_run.seed, "master seed")->capture_default_str();

  tann::SynthParams synth_params;
  std::string synth_out = "synth";
  auto* synth = app.add_subcommand("synth", "generate a planted-theme synthetic dataset");
  synth->add_option("-o,--out", synth_out, "output directory")->capture_default_str();
  synth->add_option("--themes", synth_params.themes)->capture_default_str();
  synth->add_option("--images-per-theme", synth_params.images_per_theme)->capture_default_str();
  synth->add_option("--dim", synth_params.dim)->capture_default_str();
  synth->add_option("--noise", synth_params.noise)->capture_default_str();
  synth->add_option("--distinctive-words", synth_params.distinctive_words)->capture_default_str();
  synth->add_option("--common-words", synth_params.common_words)->capture_default_str();
  synth->add_option("--common-per-theme", synth_params.common_per_theme)->capture_default_str();
  synth->add_option("--support-fraction", synth_params.support_fraction)->capture_default_str();
  synth->add_option("--seed", synth_params.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*baseline) {
      std::cout << tann::commands::baseline(baseline_run);
    } else if (*synth) {
      const auto ds = tann::commands::synth(synth_params, synth_out);
      tann::log(tann::LogLevel::info, "synth: wrote " + std::to_string(ds.features.size()) + " images to " + synth_out);
    } else {
      const auto cfg = opts.resolve();
      if (*prepare) tann::commands::prepare(cfg);
      if (*cluster) tann::commands::cluster(cfg);
      if (*annotate) tann::commands::annotate(cfg, opts.jobs);
      if (*evaluate) {
        tann::commands::evaluate(cfg);
        std::cout << tann::detail::read_file(tann::commands::out_path(cfg, "report.txt").string());
      }
    }
  } catch (const tann::Error& e) {
    tann::log(tann::LogLevel::error, e.what());
    return e.kind() == tann::ErrorKind::usage ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    tann::log(tann::LogLevel::error, e.what());
    return kExitData;
  }
  return 0;
}
