#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Workdir {
  fs::path path;
  explicit Workdir(const std::string& name)
      : path(fs::temp_directory_path() / ("llgm_cli_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Workdir() { fs::remove_all(path); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(LLGM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

const char* kSmallAr1 = "mode = \"ar1\"\nworkers = 1\nlevels = [-1.0, 3.0]\n[ar1]\nregions = 12\nlength = 25\n";

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  Workdir w("usage");
  EXPECT_EQ(run("simulate --no-such-flag"), 2);
  EXPECT_EQ(run(""), 2);
  write_text(w.path / "bad.toml", "mode = \"ar1\"\nsmoothness = 3\n");
  EXPECT_EQ(run("simulate --config " + (w.path / "bad.toml").string() + " --out " + (w.path / "o").string()), 2);
  EXPECT_EQ(run("fit --out " + (w.path / "empty").string()), 2);
}

TEST(Cli, BoundaryMassExitsThree) {
  Workdir w("boundary");
  write_text(w.path / "narrow.toml", std::string(kSmallAr1) + "grid_lo = -0.5\ngrid_hi = 0.5\ngrid_points = 21\n");
  const std::string common = " --config " + (w.path / "narrow.toml").string() + " --out " + w.path.string();
  ASSERT_EQ(run("simulate" + common), 0);
  EXPECT_EQ(run("fit" + common), 3);
}

TEST(Cli, SimulateIsDeterministic) {
  Workdir w("simulate");
  const fs::path a = w.path / "a", b = w.path / "b";
  ASSERT_EQ(run("simulate --mode ar1 --seed 7 --out " + a.string()), 0);
  ASSERT_EQ(run("simulate --mode ar1 --seed 7 --out " + b.string()), 0);
  EXPECT_EQ(slurp(a / "data.csv"), slurp(b / "data.csv"));
  EXPECT_EQ(slurp(a / "truth.csv"), slurp(b / "truth.csv"));
  EXPECT_FALSE(slurp(a / "data.csv").empty());
}

TEST(Cli, StagesMatchExperimentAndScoreIsIdempotent) {
  Workdir w("stages");
  write_text(w.path / "c.toml", kSmallAr1);
  const std::string cfg = " --config " + (w.path / "c.toml").string() + " --seed 3";
  const fs::path staged = w.path / "staged", whole = w.path / "whole";
  for (const char* stage : {"simulate", "fit", "smooth", "refit", "score"})
    ASSERT_EQ(run(std::string(stage) + cfg + " --out " + staged.string()), 0) << stage;
  const std::string first = slurp(staged / "scores.csv");
  ASSERT_EQ(run("score" + cfg + " --out " + staged.string()), 0);
  EXPECT_EQ(slurp(staged / "scores.csv"), first);

  ASSERT_EQ(run("experiment" + cfg + " --out " + whole.string()), 0);
  for (const char* f : {"data.csv", "fit_summary.csv", "smoothed.csv", "refit.csv", "scores.csv"})
    EXPECT_EQ(slurp(staged / f), slurp(whole / "seed_3" / f)) << f;
  EXPECT_TRUE(fs::exists(whole / "summary.csv"));
  EXPECT_TRUE(fs::exists(whole / "manifest.json"));
}

TEST(Cli, RefitUsesOnlySmoothedFile) {
  Workdir w("refit");
  write_text(w.path / "c.toml", kSmallAr1);
  const std::string common = " --config " + (w.path / "c.toml").string() + " --out " + w.path.string();
  for (const char* stage : {"simulate", "fit", "smooth"}) ASSERT_EQ(run(std::string(stage) + common), 0);
  fs::remove(w.path / "fit_summary.csv");
  fs::remove(w.path / "fit_grid.csv");
  ASSERT_EQ(run("refit" + common), 0);
  const auto m = nlohmann::json::parse(slurp(w.path / "refit_manifest.json"));
  EXPECT_EQ(m.at("theta_source"), "smoothed.csv");
  EXPECT_EQ(m.at("reads_fit_outputs"), false);
  EXPECT_EQ(m.at("levels"), nlohmann::json::array({-1.0, 3.0}));
}
