#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "run.hpp"
#include "support.hpp"

namespace fredholm::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json base_scan() {
  return json::parse(R"j({
    "schema": 1, "command": "det-scan",
    "kernel": {"name": "gaussian-product"},
    "quadrature": {"nodes": 48},
    "det_scan": {"lambdas": [0, 1, [0.5, 0.5]]}
  })j");
}

std::string error_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, ParsesScan) {
  const auto cfg = parse_config(base_scan());
  EXPECT_EQ(cfg.command, Command::DetScan);
  EXPECT_EQ(cfg.nodes, 48u);
  ASSERT_EQ(cfg.scan_lambdas.size(), 3u);
  EXPECT_EQ(cfg.scan_lambdas[2], Complex(0.5, 0.5));
  EXPECT_FALSE(cfg.radius.has_value());
}

TEST(Config, RangeScan) {
  auto doc = base_scan();
  doc["det_scan"] = json::parse(R"j({"from": -2, "to": 2, "count": 5})j");
  const auto cfg = parse_config(doc);
  ASSERT_EQ(cfg.scan_lambdas.size(), 5u);
  EXPECT_DOUBLE_EQ(cfg.scan_lambdas[1].real(), -1.0);
}

TEST(Config, ErrorsNameTheKey) {
  auto doc = base_scan();
  doc["quadrature"]["nodez"] = 3;
  EXPECT_EQ(error_of(doc), "config key 'quadrature.nodez': unknown key");

  doc = base_scan();
  doc["schema"] = 2;
  EXPECT_EQ(error_of(doc).rfind("config key 'schema':", 0), 0u);

  doc = base_scan();
  doc.erase("kernel");
  EXPECT_EQ(error_of(doc), "config key 'kernel': required");

  doc = base_scan();
  doc["quadrature"]["nodes"] = 1;
  EXPECT_EQ(error_of(doc).rfind("config key 'quadrature.nodes':", 0), 0u);

  doc = base_scan();
  doc["kernel"] = json::parse(R"j({"name": "exp-decay", "params": [-1]})j");
  EXPECT_EQ(error_of(doc).rfind("config key 'kernel':", 0), 0u);

  doc = base_scan();
  doc["det_scan"]["lambdas"][1] = "one";
  EXPECT_EQ(error_of(doc).rfind("config key 'det_scan.lambdas[1]':", 0), 0u);

  doc = base_scan();
  doc["command"] = "index";
  EXPECT_EQ(error_of(doc), "config key 'index.lambda': required");

  doc = base_scan();
  doc["series"] = json::parse(R"j({"method": "fast"})j");
  EXPECT_EQ(error_of(doc).rfind("config key 'series.method':", 0), 0u);
}

TEST(Config, CustomKernelAndRightHandSide) {
  const auto doc = json::parse(R"j({
    "schema": 1, "command": "solve",
    "kernel": {"S": {"expr": "exp(-s^2 - t^2)", "decay_radius": 3}, "label": "mine"},
    "solve": {"lambda": 0.5, "rhs": {"expr": "exp(-s^2)"}, "output_grid": {"radius": 1, "count": 3}}
  })j");
  const auto cfg = parse_config(doc);
  ASSERT_TRUE(cfg.kernel.has_value());
  EXPECT_EQ(cfg.kernel->label(), "mine");
  EXPECT_NEAR(cfg.solve.g(1.0).real(), std::exp(-1.0), 1e-15);
  EXPECT_EQ(cfg.solve.output_grid.size(), 3u);

  auto bad = doc;
  bad["kernel"]["S"].erase("decay_radius");
  EXPECT_EQ(error_of(bad), "config key 'kernel.S.decay_radius': required with expr");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fredholm_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Run, DetScanWritesCsvAndRunJson) {
  const auto dir = fresh_dir("scan");
  const auto res = run(parse_config(base_scan()), dir);
  EXPECT_EQ(res.exit_code, exit_ok) << res.error;
  const auto csv = slurp(dir / "det_scan.csv");
  EXPECT_EQ(csv.rfind("re_lambda,im_lambda,re_D0,im_D0,truncation_bound,quad_tail\n", 0), 0u);
  const auto meta = json::parse(slurp(dir / "run.json"));
  EXPECT_EQ(meta["status"], "ok");
  EXPECT_EQ(meta["exit_code"], 0);
}

TEST(Run, SolveNotSolvableExitCode) {
  auto doc = json::parse(R"j({
    "schema": 1, "command": "solve",
    "kernel": {"name": "gaussian-product"},
    "index": {"grid": {"radius": 3, "count": 13}},
    "solve": {"lambda": 0.7978845608028654, "rhs": {"name": "gaussian"}}
  })j");
  const auto dir = fresh_dir("solve");
  const auto res = run(parse_config(doc), dir);
  EXPECT_EQ(res.exit_code, exit_not_solvable);
  const auto sol = json::parse(slurp(dir / "solution.json"));
  EXPECT_EQ(sol["solvable"], false);
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(FREDHOLM_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Binary, ExitCodes) {
  const auto dir = fresh_dir("binary");
  {
    std::ofstream(dir / "scan.json") << base_scan().dump();
    auto bad = base_scan();
    bad["bogus"] = 1;
    std::ofstream(dir / "bad.json") << bad.dump();
    std::ofstream(dir / "broken.json") << "{ \"schema\": 1, ";
  }
  const auto out = dir / "out";
  EXPECT_EQ(run_binary("--config " + (dir / "scan.json").string() + " --output " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "det_scan.csv"));
  EXPECT_EQ(run_binary("--config " + (dir / "bad.json").string() + " --output " + out.string()), 1);
  const auto meta = json::parse(slurp(out / "run.json"));
  EXPECT_EQ(meta["status"], "error");
  EXPECT_NE(meta["error"].get<std::string>().find("config key 'bogus'"), std::string::npos);
  EXPECT_EQ(run_binary("--config " + (dir / "broken.json").string() + " --output " + out.string()), 1);
  EXPECT_EQ(run_binary("--output " + out.string()), 1);
  EXPECT_EQ(run_binary("--config " + (dir / "scan.json").string() + " --threads 0"), 1);
}

}  // namespace
}  // namespace fredholm::cli
