// Drives the installed binary end to end. The binary path arrives via the
// MXP_CLI environment variable set by CMake.

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string out;
};

std::string cli() {
  const char* p = std::getenv("MXP_CLI");
  if (p == nullptr) throw std::runtime_error("MXP_CLI not set");
  return p;
}

RunResult run(const std::string& args) {
  const std::string cmd = cli() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("popen failed");
  std::string out;
  char buf[4096];
  while (fgets(buf, sizeof buf, pipe) != nullptr) out += buf;
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path scratch(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "mxp_cli_test" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// one small trained model shared across the artifact tests
const fs::path& trained_dir() {
  static fs::path dir = [] {
    fs::path d = scratch("trained");
    RunResult r = run("train --arch maxplus-mlp --units 12 --epochs 2"
                      " --synthetic-train 400 --val-holdout 80"
                      " --seed 7 --out " + d.string());
    if (r.code != 0) throw std::runtime_error("seed train failed:\n" + r.out);
    return d;
  }();
  return dir;
}

}  // namespace

TEST(CliTest, NoSubcommandIsUsageError) {
  EXPECT_EQ(run("").code, 1);
}

TEST(CliTest, UnknownFlagIsUsageError) {
  EXPECT_NE(run("train --no-such-flag 1").code, 0);
}

TEST(CliTest, GradcheckPassesAllLayers) {
  RunResult r = run("gradcheck");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("PASS dense"), std::string::npos);
  EXPECT_NE(r.out.find("PASS maxplus"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(CliTest, ApproxAbsIsExact) {
  RunResult r = run("approx --pwl abs");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("max abs error"), std::string::npos);
}

TEST(CliTest, ApproxWritesGridCsv) {
  const fs::path dir = scratch("approx");
  const fs::path csv = dir / "grid.csv";
  RunResult r = run("approx --pwl relu --grid-steps 50 --out " + csv.string());
  EXPECT_EQ(r.code, 0) << r.out;
  std::ifstream f(csv);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "x,block,target,abs_error");
}

TEST(CliTest, ApproxBadSpecIsUsageError) {
  EXPECT_EQ(run("approx --pwl cubic").code, 1);
}

TEST(CliTest, TrainProducesArtifacts) {
  const fs::path& dir = trained_dir();
  EXPECT_TRUE(fs::exists(dir / "model.mxpl"));
  EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
  std::ifstream f(dir / "manifest.txt");
  std::stringstream ss;
  ss << f.rdbuf();
  EXPECT_NE(ss.str().find("subcommand train"), std::string::npos);
  EXPECT_NE(ss.str().find("seed 7"), std::string::npos);
}

TEST(CliTest, EvalReportsAccuracy) {
  RunResult r = run("eval --model " + (trained_dir() / "model.mxpl").string() +
                    " --synthetic-test 100");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("accuracy"), std::string::npos);
}

TEST(CliTest, EvalMissingModelIsDataError) {
  EXPECT_EQ(run("eval --model /nonexistent.mxpl --synthetic-test 10").code, 2);
}

TEST(CliTest, PruneWritesModelAndReport) {
  const fs::path dir = scratch("prune");
  RunResult r = run("prune --model " + (trained_dir() / "model.mxpl").string() +
                    " --threshold 1.0 --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir / "pruned.mxpl"));
  EXPECT_TRUE(fs::exists(dir / "prune_report.csv"));
  EXPECT_NE(r.out.find("retained filters"), std::string::npos);
}

TEST(CliTest, PrunedModelStillEvaluates) {
  const fs::path dir = scratch("prune_eval");
  ASSERT_EQ(run("prune --model " + (trained_dir() / "model.mxpl").string() +
                " --threshold 0.9 --out " + dir.string())
                .code,
            0);
  RunResult r = run("eval --model " + (dir / "pruned.mxpl").string() +
                    " --synthetic-test 100");
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST(CliTest, SweepWritesTable) {
  const fs::path dir = scratch("sweep");
  RunResult r = run("sweep --model " + (trained_dir() / "model.mxpl").string() +
                    " --grid 0.9,1.0 --synthetic-train 200 --val-holdout 50"
                    " --synthetic-test 50 --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.out;
  std::ifstream f(dir / "sweep.csv");
  std::string line;
  int rows = 0;
  while (std::getline(f, line)) ++rows;
  EXPECT_EQ(rows, 4);  // header + 2 grid rows + unpruned row
}

TEST(CliTest, SeedStudyWritesStats) {
  const fs::path dir = scratch("study");
  RunResult r = run("seed-study --arch maxplus-mlp --units 8 --epochs 1"
                    " --synthetic-train 200 --val-holdout 50"
                    " --seeds 1,2 --ratios 0,0.5 --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.out;
  std::ifstream f(dir / "seed_study_stats.csv");
  std::string line;
  int rows = 0;
  while (std::getline(f, line)) ++rows;
  EXPECT_EQ(rows, 3);  // header + one row per ratio
}

TEST(CliTest, VizEmitsImages) {
  const fs::path dir = scratch("viz");
  RunResult r = run("viz --model " + (trained_dir() / "model.mxpl").string() +
                    " --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir / "wm_class0_padded.pgm"));  // J=12 is not square
  EXPECT_TRUE(fs::exists(dir / "filter_class9.pgm"));
}

TEST(CliTest, ConfigFileSetsDefaultsFlagsOverride) {
  const fs::path dir = scratch("config");
  const fs::path cfg = dir / "run.cfg";
  {
    std::ofstream f(cfg);
    f << "# comment\nunits = 6\nepochs = 1\nseed = 42\n";
  }
  RunResult r = run("train --config " + cfg.string() +
                    " --seed 43 --synthetic-train 200 --val-holdout 50 --out " +
                    dir.string());
  EXPECT_EQ(r.code, 0) << r.out;
  std::ifstream f(dir / "manifest.txt");
  std::stringstream ss;
  ss << f.rdbuf();
  EXPECT_NE(ss.str().find("units 6"), std::string::npos);   // from config
  EXPECT_NE(ss.str().find("seed 43"), std::string::npos);   // flag wins
}

TEST(CliTest, ConfigFileUnknownKeyRejected) {
  const fs::path dir = scratch("badcfg");
  const fs::path cfg = dir / "run.cfg";
  {
    std::ofstream f(cfg);
    f << "unitz = 6\n";
  }
  EXPECT_EQ(run("train --config " + cfg.string() + " --synthetic-train 100").code,
            1);
}

TEST(CliTest, CorruptedIdxIsDataError) {
  const fs::path dir = scratch("badidx");
  {
    std::ofstream f(dir / "img.idx", std::ios::binary);
    f << "not an idx file";
  }
  {
    std::ofstream f(dir / "lab.idx", std::ios::binary);
    f << "junk";
  }
  RunResult r = run("eval --model " + (trained_dir() / "model.mxpl").string() +
                    " --test-images " + (dir / "img.idx").string() +
                    " --test-labels " + (dir / "lab.idx").string());
  EXPECT_EQ(r.code, 2) << r.out;
}
