#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bregmangrid/io.hpp"
#include "../oracles.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "bregmangrid_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Run run(const std::string& args, const std::string& env = "") {
  const fs::path out = scratch() / "stdout.txt";
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = env + " " + std::string(BREGMANGRID_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string data(const std::string& name) { return std::string(BREGMANGRID_DATA) + "/" + name; }

bregmangrid::Vec vec(const Json& a) {
  bregmangrid::Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

}  // namespace

TEST_CASE("missing scenario file exits 1 with a prefixed message") {
  const Run r = run("equilibrium --scenario " + data("no_such_file.json"));
  CHECK(r.code == 1);
  CHECK(r.err.rfind("bregmangrid-error: input:", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run("").code == 1);
  CHECK(run("certify").code == 1);
  CHECK(run("simulate --scenario " + data("convergence.json") + " --seed notanumber").code == 1);
}

TEST_CASE("infeasible loading exits 2") {
  const Run r = run("equilibrium --scenario " + data("infeasible.json"));
  CHECK(r.code == 2);
  CHECK(r.err.rfind("bregmangrid-error: solver:", 0) == 0);
}

TEST_CASE("voltage at the floor exits 3") {
  const Run r = run("simulate --scenario " + data("collapse.json"));
  CHECK(r.code == 3);
  CHECK(r.err.rfind("bregmangrid-error: assumption:", 0) == 0);
}

TEST_CASE("equilibrium report satisfies the steady-state equations") {
  const Run r = run("equilibrium --scenario " + data("convergence.json"));
  REQUIRE(r.code == 0);
  const Json doc = Json::parse(r.out);
  const auto topo = bregmangrid::load_network(data("ring3.json"));
  const bregmangrid::Vec theta = vec(doc.at("theta0"));
  const bregmangrid::Vec v = vec(doc.at("V_bar"));
  const bregmangrid::Vec p_star = vec(doc.at("P_star"));
  const bregmangrid::Vec u_p = vec(doc.at("u_P_bar"));
  const bregmangrid::Vec u_q = vec(doc.at("u_Q_bar"));
  const double omega0 = doc.at("omega0").get<double>();
  const bregmangrid::Vec p = oracle::active_power(topo, theta, v);
  const bregmangrid::Vec q = oracle::reactive_power(topo, theta, v);
  // scenario gains: K_P = 1, K_Q = 0.5, omega* = 0
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(-omega0 - (p(i) - p_star(i)) + u_p(i)) < 1e-10);
    CHECK(std::abs(-v(i) - 0.5 * q(i) + u_q(i)) < 1e-10);
  }
  CHECK(doc.at("frequency_residual").get<double>() < 1e-10);
  CHECK(doc.at("voltage_residual").get<double>() < 1e-10);
}

TEST_CASE("certify verdicts for the demo scenarios") {
  const auto verdict = [](const std::string& scenario) {
    const Run r = run("certify --scenario " + data(scenario));
    REQUIRE(r.code == 0);
    return Json::parse(r.out).at("verdict").get<std::string>();
  };
  CHECK(verdict("convergence.json") == "ConvexCertified");
  CHECK(verdict("stressed.json") == "UnstableCertified");
  CHECK(verdict("boundary.json") == "Inconclusive");
}

TEST_CASE("simulate is byte-identical for a fixed seed and writes both files") {
  const fs::path a = scratch() / "run_a";
  const fs::path b = scratch() / "run_b";
  const fs::path c = scratch() / "run_c";
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
  const std::string base = "simulate --scenario " + data("convergence.json");
  REQUIRE(run(base + " --seed 11 --out " + a.string()).code == 0);
  REQUIRE(run(base + " --seed 11 --out " + b.string()).code == 0);
  REQUIRE(run(base + " --seed 12 --out " + c.string()).code == 0);
  const std::string trace_a = slurp(a / "trace.csv");
  CHECK(!trace_a.empty());
  CHECK(trace_a == slurp(b / "trace.csv"));
  CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
  CHECK(trace_a != slurp(c / "trace.csv"));

  const Json report = Json::parse(slurp(a / "report.json"));
  CHECK(report.at("status") == "completed");
  CHECK(report.at("dissipation").at("rates_match") == true);
  CHECK(report.at("dissipation").at("nonincreasing") == true);
  CHECK(report.at("sharing").at("steady") == true);
  for (const auto& w : report.at("omega_final")) CHECK(std::abs(w.get<double>()) < 1e-6);
}

TEST_CASE("network override replaces the scenario network") {
  const Run r = run("equilibrium --scenario " + data("sweep.json") + " --network " + data("line2.json"));
  CHECK(r.code == 0);
  const Run bad = run("equilibrium --scenario " + data("sweep.json") + " --network " + data("ring3.json"));
  CHECK(bad.code == 1);
}

TEST_CASE("sweep re-certifies every grid point") {
  const fs::path dir = scratch() / "sweep";
  fs::remove_all(dir);
  const Run r = run("sweep --scenario " + data("sweep.json") + " --out " + dir.string());
  REQUIRE(r.code == 0);
  const Json doc = Json::parse(slurp(dir / "sweep.json"));
  CHECK(doc.at("parameter") == "P_star");
  REQUIRE(doc.at("points").size() == 9);
  CHECK(doc.at("points")[0].at("verdict") == "ConvexCertified");
  for (const auto& p : doc.at("points")) CHECK(p.contains("status"));
  const Run again = run("sweep --scenario " + data("sweep.json"));
  CHECK(again.out == slurp(dir / "sweep.json"));
}

TEST_CASE("logging goes to standard error only") {
  const Run quiet = run("certify --scenario " + data("boundary.json"));
  const Run loud = run("certify --scenario " + data("boundary.json"), "BREGMANGRID_LOG=info");
  CHECK(quiet.err.empty());
  CHECK(loud.out == quiet.out);
  CHECK(loud.err.find("bregmangrid: verdict Inconclusive") != std::string::npos);
}
