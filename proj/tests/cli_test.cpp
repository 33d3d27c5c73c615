#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run geoparc(const std::string& args) {
  std::string cmd = std::string(GEOPARC_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string data(const char* name) { return std::string(GEOPARC_TEST_DATA) + "/" + name; }

fs::path scratch() {
  auto dir = fs::temp_directory_path() / "geoparc_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("classify subcritical") {
  auto r = geoparc("classify --law " + data("geo02.json") + " --q 0.52");
  REQUIRE(r.status == 0);
  auto j = json::parse(r.out);
  CHECK(j["schema"] == 1);
  CHECK(j["phase"] == "subcritical");
  CHECK(j["kind"] == "root");
  CHECK(j["q_c"].get<double>() == doctest::Approx(0.5451754).epsilon(1e-7));
  CHECK(j["t_c"].get<double>() == doctest::Approx(1.5));
  CHECK(j["boundary"] == false);
}

TEST_CASE("classify supercritical binary") {
  auto r = geoparc("classify --law " + data("bin05.json") + " --q 0.9");
  REQUIRE(r.status == 0);
  auto j = json::parse(r.out);
  CHECK(j["phase"] == "supercritical");
  CHECK(j["q_c"].is_null());
}

TEST_CASE("classify validation errors exit 2") {
  auto r = geoparc("classify --law " + data("geo02.json") + " --q 0.5");
  CHECK(r.status == 2);
  CHECK(r.out.find("q out of range") != std::string::npos);
  auto j = json::parse(r.out);
  CHECK(j["error"] == "BadParam");
  CHECK(geoparc("classify --law /nonexistent.json --q 0.52").status == 2);
  CHECK(geoparc("classify --q 0.52").status == 2);
  CHECK(geoparc("frobnicate").status == 2);
  CHECK(geoparc("classify --law " + data("geo02.json") + " --q abc").status == 2);
}

TEST_CASE("threshold curve csv") {
  auto out = scratch() / "curve.csv";
  auto r = geoparc("threshold-curve --family geometric --alpha-grid 0.01:0.33:0.01 --out " + out.string());
  REQUIRE(r.status == 0);
  std::istringstream in(slurp(out));
  std::string line;
  std::getline(in, line);
  CHECK(line == "alpha,t_c,criterion,q_c");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream fields(line);
    std::string a, t, c, q;
    std::getline(fields, a, ',');
    std::getline(fields, t, ',');
    std::getline(fields, c, ',');
    std::getline(fields, q, ',');
    double alpha = std::stod(a);
    double expected = 0.5 * (1 + std::pow(1 - 3 * alpha, 1.5) / (1 + 9 * alpha));
    CHECK(std::fabs(std::stod(q) - expected) <= 1e-9);
  }
  CHECK(rows == 33);
  auto manifest = json::parse(slurp(out.string() + ".manifest.json"));
  CHECK(manifest["schema"] == 1);
  CHECK(manifest["command"] == "threshold-curve");
  CHECK(manifest["outputs"][0] == out.string());

  CHECK(geoparc("threshold-curve --family geometric --alpha-grid 0.3:0.1:0.01").status == 2);
  CHECK(geoparc("threshold-curve --family geometric --alpha-grid 0.1:0.3").status == 2);
  CHECK(geoparc("threshold-curve --family geometric --alpha-grid 0.1:0.3:0").status == 2);
}

TEST_CASE("infeasible curve points are empty") {
  auto r = geoparc("threshold-curve --family binary --alpha-grid 0.2:0.5:0.3");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("\n0.5,") != std::string::npos);
  CHECK(r.out.find(",\n", r.out.find("\n0.5,")) != std::string::npos);
}

TEST_CASE("coeffs table") {
  auto r = geoparc("coeffs --law " + data("bin02.json") + " --nmax 4 --kmax 2");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("2,0,9/100") != std::string::npos);
  auto f = geoparc("coeffs --law " + data("poi03.json") + " --nmax 3 --kmax 1 --mode float");
  CHECK(f.status == 0);
  CHECK(geoparc("coeffs --law " + data("poi03.json") + " --nmax 3 --mode rational").status == 2);
  CHECK(geoparc("coeffs --law " + data("geo02.json") + " --nmax 3 --mode decimal").status == 2);
}

TEST_CASE("oracle report") {
  auto out = scratch() / "oracle.csv";
  auto r = geoparc("oracle --law " + data("bin02.json") + " --nmax 6 --kmax 3 --out " + out.string());
  REQUIRE(r.status == 0);
  std::istringstream in(slurp(out));
  std::string line;
  std::getline(in, line);
  CHECK(line == "n,k,oracle,tutte,delta,mode");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    auto a = line.rfind(','), b = line.rfind(',', a - 1);
    CHECK(std::stod(line.substr(b + 1, a - b - 1)) == 0.0);
    CHECK(line.substr(a + 1) == "rational");
  }
  CHECK(rows == 24);
  CHECK(geoparc("oracle --law " + data("bin02.json") + " --nmax 11").status == 2);
}

TEST_CASE("simulate is reproducible") {
  auto a = scratch() / "sim_a.csv";
  auto b = scratch() / "sim_b.csv";
  std::string args = "simulate --law " + data("geo02.json") + " --q 0.52 --samples 20000 --seed 42 --out ";
  REQUIRE(geoparc(args + a.string()).status == 0);
  REQUIRE(geoparc("simulate --law " + data("geo02.json") + " --q 0.52 --samples 20000 --seed 42 --out " +
                  b.string()).status == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).rfind("stat,k_or_n,value,stderr\n", 0) == 0);
  auto manifest = json::parse(slurp(a.string() + ".manifest.json"));
  CHECK(manifest["seed"] == 42);
  CHECK(manifest["config"]["samples"] == 20000);

  auto c = geoparc("simulate --config " + data("experiment.json"));
  CHECK(c.status == 0);
  CHECK(geoparc("simulate --law " + data("geo02.json") + " --q 1.2").status == 2);
}

TEST_CASE("verify selected criteria") {
  auto out = scratch() / "verify.json";
  auto r = geoparc("verify --only 1 2 --out " + out.string());
  CHECK(r.status == 0);
  CHECK(r.out.find("PASS  1") != std::string::npos);
  CHECK(r.out.find("PASS  2") != std::string::npos);
  auto report = json::parse(slurp(out));
  CHECK(report["passed"] == true);
  CHECK(report["criteria"].size() == 2);
  CHECK(fs::exists(out.string() + ".manifest.json"));
  CHECK(geoparc("verify --only 11").status == 2);
}
