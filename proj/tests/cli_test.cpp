#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <json.hpp>

#ifndef QCDMA_CLI_PATH
#error "QCDMA_CLI_PATH must point at the CLI binary"
#endif

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run(const std::string& args) {
  const std::string cmd = std::string(QCDMA_CLI_PATH) + " " + args + " 2>/dev/null";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST(Cli, SkrJsonDefaults) {
  const CliResult r = run("skr --json");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["regime"], "asymptotic");
  EXPECT_EQ(j["per_user"].size(), 2u);
  EXPECT_TRUE(j.contains("engine_version"));
}

TEST(Cli, ValidationErrorExitsOne) {
  EXPECT_EQ(run("skr --n-users 3").code, 1);
  EXPECT_EQ(run("skr --M 1.5").code, 1);
  EXPECT_EQ(run("finite").code, 1);  // no finite_size block
  EXPECT_EQ(run("--no-such-flag").code, 1);
}

TEST(Cli, ThresholdFailureExitsTwo) {
  const CliResult bad = run("oracle-check --cases 3 --threshold 0");
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
  const CliResult good = run("oracle-check --cases 20");
  EXPECT_EQ(good.code, 0);
  EXPECT_NE(good.out.find("PASS"), std::string::npos);
}

TEST(Cli, MissingFileExitsThree) {
  EXPECT_EQ(run("skr --config /nonexistent/qcdma.json").code, 3);
  EXPECT_EQ(run("sweep --param M --values 0.1 --csv /nonexistent/dir/out.csv").code, 3);
}

TEST(Cli, SeededMonteCarloIsReproducible) {
  const std::string args = "pe-mc --eta-eff 0.05 --sigma2 1.5 --va 100 --m 2000 --trials 200 --seed 7";
  const CliResult a = run(args);
  const CliResult b = run(args);
  EXPECT_EQ(a.code, b.code);
  EXPECT_LE(a.code, 2);
  EXPECT_FALSE(a.out.empty());
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, SweepWritesCsv) {
  const CliResult r = run("sweep --param distance_km --from 10 --to 50 --points 5 --output total");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "swept_param,value,regime,total_rate,flags");
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 6);
}

TEST(Cli, FiguresWritesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "qcdma_cli_fig";
  std::filesystem::remove_all(dir);
  ASSERT_EQ(run("figures fig6a --out " + dir.string()).code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "fig6a_manifest.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "fig6a_N2.csv"));
  std::filesystem::remove_all(dir);
}
