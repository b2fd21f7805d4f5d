#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef CAVDET_CLI
#error "CAVDET_CLI must name the cavdet executable"
#endif

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "cavdet_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(CAVDET_CLI) + " " + args + " > " + (kWork / "stdout.txt").string() + " 2> " +
                          (kWork / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  const auto p = kWork / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
  void TearDown() override { fs::remove_all(kWork); }
};

}  // namespace

TEST_F(Cli, ModelEvalSucceeds) {
  EXPECT_EQ(run("model eval --out " + (kWork / "m").string()), 0);
  const auto out = slurp(kWork / "stdout.txt");
  EXPECT_NE(out.find("[model]"), std::string::npos);
  EXPECT_NE(out.find("four_eps0"), std::string::npos);
  EXPECT_TRUE(fs::exists(kWork / "m" / "model.txt"));
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  const auto unknown = write_config("unknown.conf", "[physics]\neta = 4.3\nbogus = 1\n");
  EXPECT_EQ(run("model eval --config " + unknown.string()), 2);
  const auto err = slurp(kWork / "stderr.txt");
  EXPECT_NE(err.find("line 3"), std::string::npos);
  EXPECT_NE(err.find("physics.bogus"), std::string::npos);

  const auto range = write_config("range.conf", "[chain]\nq_s = 1.5\n");
  EXPECT_EQ(run("simulate --config " + range.string()), 2);
  EXPECT_EQ(run("model eval --config " + (kWork / "missing.conf").string()), 2);
  EXPECT_EQ(run("scenario fig9"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("simulate --cycles many"), 2);
}

TEST_F(Cli, InfeasibleModelExitsThree) {
  const auto bad = write_config("bad.conf", "[targets]\ntransmission = 0.5\nq = 0.5\nm = 0.1\n");
  EXPECT_EQ(run("simulate --config " + bad.string() + " --out " + kWork.string()), 3);
  EXPECT_NE(slurp(kWork / "stderr.txt").find("M >= Q*T_s"), std::string::npos);
}

TEST_F(Cli, SimulateAnalyzeRoundTrip) {
  const auto cfg = write_config("run.conf",
                                "[simulation]\nn_cycles = 150\n[targets]\ninput_rate_per_us = 0.5\ntransmission = 0.2\n"
                                "q = 0.1\nm = 0.0233\ng2_zero = 4\n");
  const auto a = kWork / "a";
  const auto b = kWork / "b";
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --seed 11 --out " + a.string()), 0);
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --seed 11 --threads 3 --out " + b.string()), 0);
  for (const char* f : {"clicks.csv", "clicks.csv.meta", "background.csv", "background.csv.meta", "manifest.txt"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;

  ASSERT_EQ(run("analyze " + (a / "clicks.csv").string() + " --out " + (a / "analysis").string()), 0);
  const auto summary = slurp(a / "analysis" / "summary.txt");
  EXPECT_NE(summary.find("g2_zero = "), std::string::npos);
  EXPECT_NE(summary.find("has_companion = true"), std::string::npos);
  EXPECT_NE(summary.find("[stream]\nseed = 11\n"), std::string::npos) << summary;
  EXPECT_TRUE(fs::exists(a / "analysis" / "histogram.csv"));

  ASSERT_EQ(run("analyze " + (b / "clicks.csv").string() + " --threads 2 --out " + (b / "analysis").string()), 0);
  EXPECT_EQ(summary, slurp(b / "analysis" / "summary.txt"));
}

TEST_F(Cli, ScenarioWritesTables) {
  ASSERT_EQ(run("scenario figS2 --out " + kWork.string()), 0);
  EXPECT_TRUE(fs::exists(kWork / "figS2.csv"));
  EXPECT_TRUE(fs::exists(kWork / "manifest.txt"));
  const auto table = slurp(kWork / "figS2.csv");
  EXPECT_EQ(table.rfind("omega_mhz,optical_depth_in,tau_eit_us,eps0,eps\n", 0), 0u);
}
