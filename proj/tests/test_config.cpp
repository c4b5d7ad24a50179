#include "superdrift/config.hpp"
#include "superdrift/field_io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

using namespace superdrift;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(SUPERDRIFT_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("superdrift_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Config, DefaultsAndPresets) {
  const RunConfig heat = parse_run_config(json::object());
  EXPECT_EQ(heat.problem.preset, "heat");
  EXPECT_EQ(heat.solver.growth_cap, 0.0);
  const RunConfig kq = parse_run_config(json{{"preset", "kq"}});
  EXPECT_EQ(kq.problem.dim, 3);
  EXPECT_EQ(kq.solver.growth_cap, 10.0);
  const RunConfig kq1 = parse_run_config(json{{"preset", "kq"}, {"dim", 1}, {"solver", {{"growth_cap", 0.0}}}});
  EXPECT_EQ(kq1.problem.dim, 1);
  EXPECT_EQ(kq1.solver.growth_cap, 0.0);
}

TEST(Config, RegularizationLevel) {
  EXPECT_FALSE(parse_run_config(json{{"reg_n", "inf"}}).problem.reg_n.has_value());
  EXPECT_EQ(*parse_run_config(json{{"reg_n", 50}}).problem.reg_n, 50.0);
  EXPECT_THROW(parse_run_config(json{{"reg_n", "big"}}), ConfigError);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_run_config(json{{"thetta", 1.0}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"solver", {{"dtt", 1.0}}}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"theta", "one"}}), ConfigError);
  EXPECT_THROW(parse_run_config(json{{"solver", {{"dt_policy", "sometimes"}}}}), ConfigError);
  EXPECT_THROW(parse_run_config(json::array()), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/superdrift.json"), ConfigError);
}

TEST(Config, HashIsDeterministicAndSensitive) {
  const json a = to_json(parse_run_config(json{{"mass", 2.0}}));
  const json b = to_json(parse_run_config(json{{"mass", 2.0}}));
  const json c = to_json(parse_run_config(json{{"mass", 2.5}}));
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  // Round trip through the resolved form is a fixed point.
  EXPECT_EQ(to_json(parse_run_config(a)), a);
}

TEST(Cli, RegimeExample) {
  const Result r = cli("regime --N 3 --theta 0.3333333 --r inf");
  ASSERT_EQ(r.code, 0);
  const json doc = json::parse(r.out);
  EXPECT_EQ(doc.at("regime"), "GlobalSmallTheta");
  EXPECT_TRUE(doc.at("exponents").contains("q_star_star"));
}

TEST(Cli, ConstantsExample) {
  const Result r = cli("constants --theta 1 --C 1 --q 2 --N 3");
  ASSERT_EQ(r.code, 0);
  const json doc = json::parse(r.out);
  EXPECT_NEAR(doc.at("smallness").at("threshold").get<double>(), 0.25, 1e-15);
}

TEST(Cli, MalformedConfigExitsOne) {
  const fs::path dir = scratch("badcfg");
  std::ofstream(dir / "bad.json") << "{\"theta\": ";
  EXPECT_EQ(cli("run --config " + (dir / "bad.json").string() + " --out " + (dir / "out").string()).code, 1);
  std::ofstream(dir / "unknown.json") << "{\"nope\": 1}";
  EXPECT_EQ(cli("run --config " + (dir / "unknown.json").string() + " --out " + (dir / "out").string()).code, 1);
  EXPECT_EQ(cli("run --preset heat --dim 7").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
  fs::remove_all(dir);
}

TEST(Cli, ForcedCapExceedanceExitsTwo) {
  const fs::path dir = scratch("cap");
  const std::string base = "run --preset power-drift --N 1 --cells 32 --mass 5 --horizon 0.05 --cap-linf 1 --out " +
                           (dir / "o").string();
  EXPECT_EQ(cli(base).code, 0);
  const json manifest = json::parse(read_file((dir / "o" / "manifest.json").string()));
  EXPECT_EQ(manifest.at("status"), "blow-up-suspected");
  EXPECT_EQ(cli(base + " --fail-on-blowup").code, 2);
  fs::remove_all(dir);
}

TEST(Cli, RunsAreByteIdentical) {
  const fs::path dir = scratch("determinism");
  const std::string args = "run --preset power-drift --N 2 --cells 16 --mass 2 --horizon 0.02 --snapshots csv --out ";
  ASSERT_EQ(cli(args + (dir / "a").string()).code, 0);
  ASSERT_EQ(cli(args + (dir / "b").string()).code, 0);
  for (const char* name : {"norms.csv", "snapshots.csv"}) {
    const std::string a = read_file((dir / "a" / name).string());
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, read_file((dir / "b" / name).string())) << name;
  }
  const json ma = json::parse(read_file((dir / "a" / "manifest.json").string()));
  const json mb = json::parse(read_file((dir / "b" / "manifest.json").string()));
  EXPECT_EQ(ma.at("config_hash"), mb.at("config_hash"));
  EXPECT_EQ(ma.at("status"), "completed");
  const std::string header = read_file((dir / "a" / "norms.csv").string());
  EXPECT_EQ(header.substr(0, header.find('\n')).rfind("t,dt,L1,L2,Lm,Linf", 0), 0u);
  fs::remove_all(dir);
}

TEST(Cli, DiagnoseAStoredRun) {
  const fs::path dir = scratch("diagnose");
  ASSERT_EQ(cli("run --preset heat --N 2 --cells 16 --horizon 0.02 --out " + (dir / "run").string()).code, 0);
  EXPECT_EQ(cli("diagnose --run-dir " + (dir / "run").string()).code, 0);
  EXPECT_TRUE(fs::exists(dir / "run" / "diagnostics.json"));
  EXPECT_TRUE(fs::exists(dir / "run" / "diagnostics.csv"));
  fs::remove_all(dir);
}

TEST(Cli, SweepFansOut) {
  const fs::path dir = scratch("sweep");
  const Result r = cli("sweep --preset power-drift --N 1 --cells 24 --horizon 0.01 --masses 1 2 --thetas 0.5 1 --out " +
                       (dir / "s").string());
  ASSERT_EQ(r.code, 0);
  const std::string csv = read_file((dir / "s" / "sweep.csv").string());
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "run,mass,theta,n,status,final_time,max_linf");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  fs::remove_all(dir);
}

TEST(Cli, ContractionAndFixedPointVerdicts) {
  const fs::path dir = scratch("verdicts");
  EXPECT_EQ(cli("contraction-test --preset power-drift --N 1 --cells 32 --mass 2 --horizon 0.02 --out " +
                (dir / "c").string())
                .code,
            0);
  EXPECT_TRUE(json::parse(read_file((dir / "c" / "verdict.json").string())).at("pass").get<bool>());
  EXPECT_EQ(cli("fixedpoint --preset power-drift --N 1 --cells 32 --mass 0.05 --E constant:0.5 --horizon 0.02 "
                "--dt-policy fixed --dt 0.001 --out " +
                (dir / "f").string())
                .code,
            0);
  const json v = json::parse(read_file((dir / "f" / "verdict.json").string()));
  EXPECT_TRUE(v.at("converged").get<bool>());
  EXPECT_TRUE(v.at("smallness").contains("threshold"));
  fs::remove_all(dir);
}
