#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#ifndef MINFER_CLI_PATH
#error "MINFER_CLI_PATH must point at the command line binary"
#endif

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

CliResult run_cli(const std::string& arguments, const std::string& env = "") {
  const std::string command = env + (env.empty() ? "" : " ") + MINFER_CLI_PATH + " " +
                              arguments + " 2>&1";
  CliResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buffer[4096];
  size_t got = 0;
  while ((got = fread(buffer, 1, sizeof buffer, pipe)) > 0) {
    result.output.append(buffer, got);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("minfer_cli_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> parse_csv_line(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

int line_count(const std::string& text) {
  int c = 0;
  for (char ch : text) c += ch == '\n';
  return c;
}

}  // namespace

TEST_CASE("estimate fits a simulated sphere problem and writes its outputs") {
  TempDir dir("estimate");
  const auto res = run_cli("estimate --manifold sphere:3 --simulate n=80,seed=5 --out " +
                           dir.str());
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("converged_grad_norm") != std::string::npos);

  const std::string theta_text = slurp(dir.path / "theta_hat.csv");
  REQUIRE(line_count(theta_text) == 1);
  const auto theta = parse_csv_line(theta_text);
  REQUIRE(theta.size() == 3);
  const double norm =
      std::sqrt(theta[0] * theta[0] + theta[1] * theta[1] + theta[2] * theta[2]);
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(theta[1] > 0.9);  // near the design center (0,1,0)

  const std::string sigma_text = slurp(dir.path / "sigma.csv");
  REQUIRE(line_count(sigma_text) == 2);  // 2x2 chart covariance
  CHECK(parse_csv_line(sigma_text.substr(0, sigma_text.find('\n'))).size() == 2);
  CHECK(line_count(slurp(dir.path / "grad_norms.csv")) >= 1);
}

TEST_CASE("estimate accepts a data file and an explicit start") {
  TempDir dir("data");
  // four unit-norm samples as rows
  {
    std::ofstream out(dir.path / "samples.csv");
    out << "0,1,0\n0.1,0.9949874371066199,0\n-0.1,0.9949874371066199,0\n"
           "0,0.99,0.141067359796659\n";
  }
  {
    std::ofstream out(dir.path / "start.csv");
    out << "0,1,0\n";
  }
  const auto res = run_cli("estimate --manifold sphere:3 --loss barycenter --data " +
                           (dir.path / "samples.csv").string() + " --init " +
                           (dir.path / "start.csv").string() + " --out " + dir.str());
  CHECK(res.exit_code == 0);
  const auto theta = parse_csv_line(slurp(dir.path / "theta_hat.csv"));
  REQUIRE(theta.size() == 3);
  CHECK(theta[1] > 0.99);
}

TEST_CASE("usage problems exit 1") {
  CHECK(run_cli("").exit_code == 1);                  // no subcommand
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("estimate --manifold moebius:3 --simulate n=20,seed=1").exit_code == 1);
  CHECK(run_cli("estimate --manifold sphere:3").exit_code == 1);  // no data source
  CHECK(run_cli("estimate --manifold sphere:3 --simulate n=20,seed=1 --data x.csv").exit_code ==
        1);
  CHECK(run_cli("infer --manifold sphere:3 --simulate n=20,seed=1 --statistic huber").exit_code ==
        1);
  CHECK(run_cli("test --manifold sphere:3 --simulate n=20,seed=1").exit_code == 1);  // no null
  CHECK(run_cli("simulate --study fish").exit_code == 1);
}

TEST_CASE("data problems exit 2") {
  TempDir dir("baddata");
  CHECK(run_cli("estimate --manifold sphere:3 --data /nonexistent/samples.csv").exit_code == 2);
  {
    std::ofstream out(dir.path / "nan.csv");
    out << "0,1,0\n0,nan,0\n";
  }
  CHECK(run_cli("estimate --manifold sphere:3 --data " + (dir.path / "nan.csv").string())
            .exit_code == 2);
  {
    std::ofstream out(dir.path / "narrow.csv");
    out << "0,1\n1,0\n";  // width 2 against a 3-dimensional ambient
  }
  CHECK(run_cli("estimate --manifold sphere:3 --data " + (dir.path / "narrow.csv").string())
            .exit_code == 2);
}

TEST_CASE("infer reports quantiles and honors a membership query") {
  TempDir dir("infer");
  // the fitted point itself is always inside its own Wald region
  const auto est = run_cli("estimate --manifold sphere:3 --simulate n=60,seed=9 --out " +
                           dir.str());
  REQUIRE(est.exit_code == 0);
  const auto res = run_cli("infer --manifold sphere:3 --simulate n=60,seed=9 --b 80 --out " +
                           dir.str() + " --query " + (dir.path / "theta_hat.csv").string());
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("quantile ") != std::string::npos);
  CHECK(res.output.find("inside") != std::string::npos);

  const auto region = nlohmann::json::parse(slurp(dir.path / "region.json"));
  CHECK(region["kind"] == "wald");
  CHECK(region["level"].get<double>() == doctest::Approx(0.9));
  CHECK(region["b"] == 80);
  CHECK(region["decision"].get<bool>() == true);
  CHECK(region["flags"]["small_b"].get<bool>() == true);  // 80 < 100
  CHECK(line_count(slurp(dir.path / "series.csv")) == 80);
}

TEST_CASE("one-sided intrinsic intervals carry a single quantile") {
  TempDir dir("sided");
  const auto res = run_cli(
      "infer --manifold sphere:3 --simulate n=60,seed=9 --b 120 --statistic intrinsic-t "
      "--sided upper --alpha 0.05 --out " +
      dir.str());
  CHECK(res.exit_code == 0);
  const auto region = nlohmann::json::parse(slurp(dir.path / "region.json"));
  CHECK(region["kind"] == "intrinsic-t");
  CHECK(region["sided"] == "upper");
  CHECK(region["level"].get<double>() == doctest::Approx(0.95));
  CHECK(region["quantile"].is_number());
  CHECK(region["direction"].size() == 2);
  CHECK(region["denom"].get<double>() > 0.0);
}

TEST_CASE("worker count never changes the emitted bytes") {
  TempDir dir1("threads1");
  TempDir dir8("threads8");
  const std::string spec = "infer --manifold stiefel:4,2 --simulate n=40,seed=13 --b 60 ";
  const auto r1 = run_cli(spec + "--out " + dir1.str(), "MANIFOLD_INFER_THREADS=1");
  const auto r8 = run_cli(spec + "--out " + dir8.str(), "MANIFOLD_INFER_THREADS=8");
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r8.exit_code == 0);
  CHECK(r1.output == r8.output);
  CHECK(slurp(dir1.path / "series.csv") == slurp(dir8.path / "series.csv"));
  CHECK(slurp(dir1.path / "region.json") == slurp(dir8.path / "region.json"));
  // the env override beats a contradictory --threads flag
  TempDir dir_env("threadsenv");
  const auto renv =
      run_cli(spec + "--threads 4 --out " + dir_env.str(), "MANIFOLD_INFER_THREADS=1");
  REQUIRE(renv.exit_code == 0);
  CHECK(slurp(dir_env.path / "series.csv") == slurp(dir1.path / "series.csv"));
}

TEST_CASE("test subcommand prints per-coordinate verdicts and accepts its own fit") {
  TempDir dir("loctest");
  const auto est = run_cli("estimate --manifold sphere:3 --simulate n=70,seed=15 --out " +
                           dir.str());
  REQUIRE(est.exit_code == 0);
  const auto res = run_cli("test --manifold sphere:3 --simulate n=70,seed=15 --b 90 --null " +
                           (dir.path / "theta_hat.csv").string() + " --out " + dir.str());
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("t[0] ") != std::string::npos);
  CHECK(res.output.find("t[1] ") != std::string::npos);
  CHECK(res.output.find("wald ") != std::string::npos);
  CHECK(res.output.find("reject") == std::string::npos);

  const auto j = nlohmann::json::parse(slurp(dir.path / "test.json"));
  CHECK(j["reject_wald"].get<bool>() == false);
  CHECK(j["b"] == 90);
  CHECK(j["reject_t"].size() == 2);
}

TEST_CASE("simulate writes study tables with manifests") {
  TempDir dir("study");
  const auto t1 = run_cli(
      "simulate --study type1 --n 20 --b 25 --epochs 2 --seed 3 --out " + dir.str());
  CHECK(t1.exit_code == 0);
  const std::string type1 = slurp(dir.path / "type1.csv");
  CHECK(line_count(type1) == 7);  // header + 3 levels x 2 statistics
  CHECK(type1.rfind("n,level,statistic,acceptance", 0) == 0);
  auto manifest = nlohmann::json::parse(slurp(dir.path / "manifest.json"));
  CHECK(manifest["study"] == "type1");
  CHECK(manifest["epochs"] == 2);
  CHECK_FALSE(manifest.contains("threads"));

  TempDir dirb("studyb");
  const auto bc =
      run_cli("simulate --study barycenter --n 30 --epochs 2 --seed 3 --out " + dirb.str());
  CHECK(bc.exit_code == 0);
  CHECK(line_count(slurp(dirb.path / "barycenter.csv")) == 3);
  CHECK(nlohmann::json::parse(slurp(dirb.path / "manifest.json"))["setting"] == "barycenter");
}

TEST_CASE("simulated studies are byte-stable across worker counts") {
  TempDir dir1("study1");
  TempDir dir8("study8");
  const std::string spec = "simulate --study type1 --n 20 --b 30 --epochs 3 --seed 4 --out ";
  REQUIRE(run_cli(spec + dir1.str(), "MANIFOLD_INFER_THREADS=1").exit_code == 0);
  REQUIRE(run_cli(spec + dir8.str(), "MANIFOLD_INFER_THREADS=8").exit_code == 0);
  CHECK(slurp(dir1.path / "type1.csv") == slurp(dir8.path / "type1.csv"));
  CHECK(slurp(dir1.path / "manifest.json") == slurp(dir8.path / "manifest.json"));
}
