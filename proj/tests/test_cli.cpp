// End-to-end checks of the anderson_lab binary. The binary path arrives via
// the ANDERSON_LAB_BIN environment variable (set by CTest).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string bin() {
  const char* p = std::getenv("ANDERSON_LAB_BIN");
  REQUIRE_MESSAGE(p != nullptr, "ANDERSON_LAB_BIN must point at the binary");
  return p;
}

int run_cmd(const std::string& cmd) {
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("anderson_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream(p) << content;
}

const char* kCltConfig = R"({
  "experiment": "clt",
  "domain": {"kind": "box", "intervals": [[0, 1]]},
  "model": {"family": "uniform", "halfwidth": 1.0, "variance": 0.3333333333333333},
  "eps_list": [0.03125],
  "k_indices": [1],
  "n_samples": 120,
  "base_seed": 17,
  "output_dir": "OUTDIR"
})";

std::string clt_config(const fs::path& outdir) {
  std::string s = kCltConfig;
  s.replace(s.find("OUTDIR"), 6, outdir.string());
  return s;
}

}  // namespace

TEST_CASE("run: produces the artifact trio and is byte-deterministic") {
  auto dir = fresh_dir("det");
  write_file(dir / "cfg.json", clt_config(dir / "runs"));

  auto out1 = dir / "run1";
  auto out2 = dir / "run2";
  CHECK(run_cmd(bin() + " run " + (dir / "cfg.json").string() + " --out " +
                out1.string() + " > /dev/null") == 0);
  CHECK(run_cmd(bin() + " run " + (dir / "cfg.json").string() + " --out " +
                out2.string() + " > /dev/null") == 0);

  for (const char* f : {"manifest.json", "records.csv", "summary.json"}) {
    CHECK(fs::exists(out1 / f));
    CHECK(fs::exists(out2 / f));
  }
  CHECK(slurp(out1 / "records.csv") == slurp(out2 / "records.csv"));
  CHECK(slurp(out1 / "records.csv").substr(0, 3) == "eps");
}

TEST_CASE("run: validation failures are exhaustive and name the legal window") {
  auto dir = fresh_dir("invalid");
  // Two independent errors in one config: both must be reported.
  write_file(dir / "bad.json", R"({
    "experiment": "clt",
    "domain": {"kind": "box", "intervals": [[0, 1]]},
    "model": {"family": "uniform"},
    "eps_list": [0.03125],
    "n_samples": 8,
    "frobnicate": 1,
    "overrides": {"kappa": 3.0}
  })");
  int code = run_cmd(bin() + " run " + (dir / "bad.json").string() + " > " +
                     (dir / "out.txt").string());
  CHECK(code == 2);
  std::string out = slurp(dir / "out.txt");
  CHECK(out.find("frobnicate") != std::string::npos);
  CHECK(out.find("kappa") != std::string::npos);
  CHECK(out.find("(0, 0.5)") != std::string::npos);  // legal interval named
}

TEST_CASE("run: unknown experiment and missing config rejected") {
  auto dir = fresh_dir("missing");
  write_file(dir / "bad.json", R"({"experiment": "frob", "eps_list": [0.1]})");
  CHECK(run_cmd(bin() + " run " + (dir / "bad.json").string() + " > /dev/null") == 2);
  CHECK(run_cmd(bin() + " run " + (dir / "nope.json").string() +
                " > /dev/null 2>&1") == 2);
}

TEST_CASE("report: clt runs get a QQ TSV with one row per sample") {
  auto dir = fresh_dir("report");
  write_file(dir / "cfg.json", clt_config(dir / "runs"));
  auto out = dir / "run";
  REQUIRE(run_cmd(bin() + " run " + (dir / "cfg.json").string() + " --out " +
                  out.string() + " > /dev/null") == 0);
  CHECK(run_cmd(bin() + " report " + out.string() + " > /dev/null") == 0);
  REQUIRE(fs::exists(out / "qq.tsv"));
  std::string qq = slurp(out / "qq.tsv");
  int rows = -1;  // header
  for (char c : qq) rows += c == '\n';
  CHECK(rows == 120);
}

TEST_CASE("report: empty or corrupt directories are rejected") {
  auto dir = fresh_dir("empty");
  CHECK(run_cmd(bin() + " report " + dir.string() + " > /dev/null 2>&1") == 2);
  write_file(dir / "manifest.json", "{not json");
  CHECK(run_cmd(bin() + " report " + dir.string() + " > /dev/null 2>&1") == 2);
}

TEST_CASE("run: converge summary approaches the continuum eigenvalue") {
  auto dir = fresh_dir("converge");
  write_file(dir / "cfg.json", R"({
    "experiment": "converge",
    "domain": {"kind": "box", "intervals": [[0, 1]]},
    "model": {"family": "gaussian", "variance": 0.0},
    "eps_list": [0.00390625],
    "k_indices": [1],
    "n_samples": 2,
    "fine_eps": 0.0009765625,
    "output_dir": ")" + (dir / "runs").string() + R"("
  })");
  auto out = dir / "run";
  REQUIRE(run_cmd(bin() + " run " + (dir / "cfg.json").string() + " --out " +
                  out.string() + " > /dev/null") == 0);
  std::string summary = slurp(out / "summary.json");
  // lambda_1(eps = 1/256) sits within 0.3 of pi^2 = 9.8696.
  auto pos = summary.find("median_lambda");
  REQUIRE(pos != std::string::npos);
  double median = std::stod(summary.substr(summary.find(':', pos) + 1));
  CHECK(std::abs(median - 9.8696044) <= 0.3);
}
