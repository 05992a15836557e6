#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

const std::string kBin = THEME_ANNOTATE_BIN;
const std::string kFixtures = FIXTURE_DIR;

int run(const std::string& args) {
  const std::string cmd = "'" + kBin + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("theme_annotate_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string common(const fs::path& out) const {
    return "-c '" + kFixtures + "/run.cfg' --features '" + kFixtures + "/features.tsv' --labels '" + kFixtures +
           "/labels.tsv' -o '" + out.string() + "'";
  }

  int pipeline(const fs::path& out, const std::string& extra = "") const {
    for (const char* step : {"prepare", "cluster", "annotate", "evaluate"}) {
      const int rc = run(std::string(step) + " " + common(out) + " " + extra);
      if (rc != 0) return rc;
    }
    return 0;
  }

  fs::path dir_;
};

TEST_F(CliTest, FullPipelineWritesArtifacts) {
  ASSERT_EQ(pipeline(dir_ / "out"), 0);
  for (const char* f : {"vocab.txt", "train_ids.txt", "test_ids.txt", "themes.tsv", "theme_stats.txt",
                        "annotations.tsv", "report.txt", "metrics.tsv", "bins.tsv", "run_manifest.txt"})
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  const auto report = slurp(dir_ / "out" / "report.txt");
  EXPECT_NE(report.find("mean_f"), std::string::npos);
  EXPECT_EQ(slurp(dir_ / "out" / "run_manifest.txt").rfind("command = evaluate\n", 0), 0u);
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  ASSERT_EQ(pipeline(dir_ / "a", "-j 1"), 0);
  ASSERT_EQ(pipeline(dir_ / "b", "-j 4"), 0);
  for (const char* f : {"vocab.txt", "train_ids.txt", "test_ids.txt", "themes.tsv", "annotations.tsv", "report.txt",
                        "metrics.tsv", "bins.tsv"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(CliTest, TraceImageWritesObjectiveTrace) {
  const auto out = dir_ / "out";
  ASSERT_EQ(run("prepare " + common(out)), 0);
  ASSERT_EQ(run("cluster " + common(out)), 0);
  std::istringstream ids(slurp(out / "test_ids.txt"));
  std::string first;
  std::getline(ids, first);
  ASSERT_EQ(run("annotate " + common(out) + " --trace-image " + first), 0);
  const auto trace = slurp(out / "layer1_trace.csv");
  EXPECT_EQ(trace.rfind("iteration,objective\n", 0), 0u);
  EXPECT_EQ(run("annotate " + common(out) + " --trace-image not_a_test_image"), 2);
}

TEST_F(CliTest, PerfectAndEmptyPredictions) {
  const auto out = dir_ / "out";
  ASSERT_EQ(pipeline(out), 0);
  // Replace the predictions with the ground truth of every test image.
  std::map<std::string, std::string> labels;
  std::istringstream lab(slurp(kFixtures + "/labels.tsv"));
  for (std::string line; std::getline(lab, line);) {
    auto tab = line.find('\t');
    labels[line.substr(0, tab)] = tab == std::string::npos ? "" : line.substr(tab + 1);
  }
  std::string perfect, empty;
  std::istringstream ids(slurp(out / "test_ids.txt"));
  for (std::string id; std::getline(ids, id);) {
    std::istringstream words(labels[id]);
    perfect += id + "\t";
    for (std::string w; words >> w;) perfect += w.substr(0, w.find(':')) + ":1.0 ";
    perfect += "\n";
    empty += id + "\t\n";
  }
  spit(out / "annotations.tsv", perfect);
  ASSERT_EQ(run("evaluate " + common(out)), 0);
  std::istringstream metrics(slurp(out / "metrics.tsv"));
  std::string line;
  std::getline(metrics, line);
  while (std::getline(metrics, line)) {
    std::istringstream row(line);
    std::string word;
    long tp = 0, fp = 0, fn = 0;
    row >> word >> tp >> fp >> fn;
    EXPECT_EQ(fp, 0) << word;
    EXPECT_EQ(fn, 0) << word;
  }
  spit(out / "annotations.tsv", empty);
  ASSERT_EQ(run("evaluate " + common(out)), 0);
  EXPECT_NE(slurp(out / "report.txt").find("mean_f             0.000000"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  const auto out = dir_ / "out";
  EXPECT_EQ(run("prepare --features /nonexistent/f.tsv --labels /nonexistent/l.tsv -o '" + out.string() + "'"), 2);
  EXPECT_EQ(run("prepare " + common(out) + " --cutoff 1.01"), 2);
  EXPECT_EQ(run("prepare " + common(out) + " --no-such-flag 3"), 2);
  EXPECT_EQ(run("prepare -c /nonexistent.cfg"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  ASSERT_EQ(run("prepare " + common(out)), 0);
  EXPECT_EQ(run("annotate " + common(out)), 2);  // no themes.tsv yet
  EXPECT_EQ(run("baseline -M 5 -z 6"), 2);
}

TEST_F(CliTest, DataErrorsExitThree) {
  spit(dir_ / "bad.tsv", "img1\t0.1 0.2\nimg2\t0.3\n");
  EXPECT_EQ(run("prepare --features '" + (dir_ / "bad.tsv").string() + "' --labels '" + kFixtures +
                "/labels.tsv' -o '" + (dir_ / "out").string() + "'"),
            3);
  spit(dir_ / "f.tsv", "a\t1 0\nb\t0 1\nc\t1 1\n");
  spit(dir_ / "l.tsv", "a\tsky\nb\tsea\n");
  EXPECT_EQ(run("prepare --features '" + (dir_ / "f.tsv").string() + "' --labels '" + (dir_ / "l.tsv").string() +
                "' -o '" + (dir_ / "out").string() + "'"),
            3);
}

TEST_F(CliTest, BaselineAndSynth) {
  EXPECT_EQ(run("baseline -M 291 -z 5 -X 0.1 --images 2000 --trials 5"), 0);
  ASSERT_EQ(run("synth -o '" + (dir_ / "s").string() + "' --themes 3 --images-per-theme 4 --dim 6"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "s" / "features.tsv"));
  EXPECT_TRUE(fs::exists(dir_ / "s" / "assignments.tsv"));
}

}  // namespace
