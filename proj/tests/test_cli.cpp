#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "transtab/csv.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(TRANSTAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Cli, MapaSucceeds) {
  TempDir d("transtab_cli_mapa");
  EXPECT_EQ(run("--out " + d.path.string() + " --scenario case_a mapa"), 0);
  const auto t = transtab::csv::parse(slurp(d.path / "case_a_mapa.csv"));
  EXPECT_FALSE(t.rows.empty());
}

TEST(Cli, CurveFromConfigFile) {
  TempDir d("transtab_cli_curve");
  write(d.path / "study.ini", "[scenario.x]\ni_mag = 0.5\n");
  EXPECT_EQ(run("--config " + (d.path / "study.ini").string() + " --out " + d.path.string() +
                " curve"),
            0);
  const auto t = transtab::csv::parse(slurp(d.path / "x_curve.csv"));
  EXPECT_EQ(t.header.front(), "delta_g_rad");
  EXPECT_EQ(t.rows.size(), 2001u);
}

TEST(Cli, SimulateWithClearingOverride) {
  TempDir d("transtab_cli_sim");
  EXPECT_EQ(run("--out " + d.path.string() + " --scenario case_a simulate --clear 0.27"), 0);
  const auto t = transtab::csv::parse(slurp(d.path / "case_a_trajectory.csv"));
  EXPECT_EQ(t.comments.back(), "termination=loss_of_synchronism");
}

TEST(Cli, ConfigErrorsExitTwo) {
  TempDir d("transtab_cli_err");
  write(d.path / "bad.ini", "[scenario.x]\nnot_a_key = 1\n");
  EXPECT_EQ(run("--config " + (d.path / "bad.ini").string() + " mapa"), 2);
  EXPECT_EQ(run("--config " + (d.path / "missing.ini").string() + " mapa"), 2);
  EXPECT_EQ(run("--scenario nope mapa"), 2);
  EXPECT_EQ(run("--step -1 cct"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run(""), 2);
}

TEST(Cli, AnalysisFailureExitsOne) {
  TempDir d("transtab_cli_fail");
  write(d.path / "heavy.ini", "[scenario.heavy]\ni_mag = 0.5\np_m = 5\n");
  EXPECT_EQ(run("--config " + (d.path / "heavy.ini").string() + " --out " + d.path.string() +
                " equilibria"),
            1);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run("--help"), 0); }
