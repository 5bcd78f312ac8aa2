#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bregmangrid/errors.hpp"
#include "bregmangrid/io.hpp"
#include "bregmangrid/simulator.hpp"
#include "helpers.hpp"

using namespace bregmangrid;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "bregmangrid_io_tests";
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p;
}

const char* kTwoNodes = R"({"nodes":[{"id":1,"shunt_b":0.2},{"id":2,"shunt_b":0.1}],
                            "edges":[{"from":1,"to":2,"b":2.5}]})";

}  // namespace

TEST_CASE("network parsing") {
  const NetworkTopology topo = parse_network(Json::parse(kTwoNodes));
  CHECK(topo.nodes() == 2);
  CHECK(topo.edges() == 1);
  CHECK(topo.edge_list()[0].susceptance == 2.5);
  CHECK(topo.shunt_susceptance()(0) == 0.2);

  SUBCASE("node order in the file does not matter") {
    const auto swapped = parse_network(Json::parse(
        R"({"nodes":[{"id":2,"shunt_b":0.1},{"id":1,"shunt_b":0.2}],"edges":[{"from":2,"to":1,"b":2.5}]})"));
    CHECK(swapped.shunt_susceptance()(0) == 0.2);
    CHECK(swapped.shunt_susceptance()(1) == 0.1);
  }
  SUBCASE("duplicate ids") {
    CHECK_THROWS_AS(parse_network(Json::parse(R"({"nodes":[{"id":1},{"id":1}],"edges":[]})")), InputError);
  }
  SUBCASE("ids out of range") {
    CHECK_THROWS_AS(parse_network(Json::parse(R"({"nodes":[{"id":1,"shunt_b":0.1},{"id":3}],"edges":[]})")),
                    InputError);
  }
  SUBCASE("missing fields") {
    CHECK_THROWS_AS(parse_network(Json::parse(R"({"edges":[]})")), InputError);
    CHECK_THROWS_AS(parse_network(Json::parse(R"({"nodes":[{"id":1,"shunt_b":0.1},{"id":2}],
                                                   "edges":[{"from":1,"to":2}]})")),
                    InputError);
  }
  SUBCASE("physically invalid values") {
    CHECK_THROWS_AS(parse_network(Json::parse(R"({"nodes":[{"id":1,"shunt_b":-0.1}],"edges":[]})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_network(Json::parse(R"({"nodes":[{"id":1,"shunt_b":0.1},{"id":2}],
                                                   "edges":[{"from":1,"to":2,"b":-1}]})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_network(Json::parse(R"({"nodes":[{"id":1},{"id":2}],
                                                   "edges":[{"from":1,"to":2,"b":1}]})")),
                    ConfigError);
  }
}

TEST_CASE("unreadable and malformed files") {
  CHECK_THROWS_AS(read_json(scratch_dir() / "does_not_exist.json"), InputError);
  CHECK_THROWS_AS(read_json(write_file("broken.json", "{\"nodes\": [")), InputError);
}

TEST_CASE("controller parsing") {
  const NetworkTopology topo = parse_network(Json::parse(kTwoNodes));
  const ControllerConfig cfg = parse_controller(
      Json::parse(R"({"kind":"QuadraticDroop","T_P":[0.5,0.7],"K_Q":2,"P_star":[0.1,-0.1],"u_Q_bar":1.1})"),
      topo);
  CHECK(cfg.kind == ControllerKind::QuadraticDroop);
  CHECK(cfg.t_p(1) == 0.7);
  CHECK(cfg.k_q(0) == 2.0);
  CHECK(cfg.k_q(1) == 2.0);
  CHECK(cfg.u_q_bar(1) == 1.1);
  CHECK(cfg.k_p(0) == 1.0);
  CHECK(cfg.lossless());

  CHECK_THROWS_AS(parse_controller(Json::parse(R"({"kind":"Magic"})"), topo), InputError);
  CHECK_THROWS_AS(parse_controller(Json::parse(R"({"kind":"EArp","K_P":[1,2,3]})"), topo), InputError);
  CHECK_THROWS_AS(parse_controller(Json::parse(R"({"K_P":1})"), topo), InputError);
}

TEST_CASE("scenario loading resolves the network next to the scenario") {
  write_file("net2.json", kTwoNodes);
  const fs::path path = write_file("scenario.json", R"({
    "network": "net2.json",
    "controller": {"kind": "ReactiveCurrent"},
    "equilibrium": {"construct": {"theta0": [0.2, 0.0], "V_bar": [1.0, 1.02]}},
    "initial": {"type": "perturbed", "radius": 0.01, "seed": 9},
    "simulation": {"t_end": 1.5, "dt": 0.005, "sample_every": 3},
    "sweep": {"parameter": "u_Q_bar", "index": 2, "from": 0.9, "to": 1.1, "points": 5}
  })");
  const Scenario sc = load_scenario(path);
  REQUIRE(sc.topology.has_value());
  CHECK(sc.topology->nodes() == 2);
  CHECK(sc.integration.t_end == 1.5);
  CHECK(sc.integration.sample_every == 3);
  REQUIRE(sc.sweep.has_value());
  CHECK(sc.sweep->index == 1);
  CHECK(sc.sweep->points == 5);

  ControllerConfig cfg = sc.config;
  const Equilibrium eq = scenario_equilibrium(sc, cfg);
  CHECK(eq.v_bar(1) == 1.02);
  CHECK(eq.frequency_residual < 1e-12);
  CHECK(eq.voltage_residual < 1e-12);

  const GridState a = initial_state(sc, cfg, eq);
  const GridState b = initial_state(sc, cfg, eq);
  CHECK(a.pack() == b.pack());
  CHECK((a.theta - eq.theta0).cwiseAbs().maxCoeff() <= 0.01);
  CHECK((a.theta - eq.theta0).cwiseAbs().maxCoeff() > 0.0);

  SUBCASE("network override") {
    write_file("net3.json", R"({"nodes":[{"id":1,"shunt_b":0.2},{"id":2},{"id":3}],
                                "edges":[{"from":1,"to":2,"b":1},{"from":2,"to":3,"b":1}]})");
    const fs::path plain = write_file("plain.json", R"({"network":"net2.json","controller":{"kind":"EArp"}})");
    CHECK(load_scenario(plain, scratch_dir() / "net3.json").topology->nodes() == 3);
  }
}

TEST_CASE("scenario validation errors") {
  write_file("net2.json", kTwoNodes);
  const auto bad = [](const std::string& extra) {
    const fs::path p = write_file("bad.json", R"({"network":"net2.json","controller":{"kind":"ReactiveCurrent"})" +
                                                  extra + "}");
    return p;
  };
  CHECK_THROWS_AS(load_scenario(bad(R"(,"simulation":{"dt":0})")), InputError);
  CHECK_THROWS_AS(load_scenario(bad(R"(,"initial":{"type":"sideways"})")), InputError);
  CHECK_THROWS_AS(load_scenario(bad(R"(,"initial":{"type":"perturbed","radius":-1})")), InputError);
  CHECK_THROWS_AS(load_scenario(bad(R"(,"sweep":{"parameter":"K_P","from":0,"to":1})")), InputError);
  CHECK_THROWS_AS(load_scenario(bad(R"(,"sweep":{"index":3,"from":0,"to":1})")), InputError);
  CHECK_THROWS_AS(load_scenario(write_file("nonet.json", R"({"network":"missing.json","controller":{"kind":"EArp"}})")),
                  InputError);
}

TEST_CASE("perturbation is deterministic per seed") {
  const GridState base = GridState::zeros(4);
  CHECK(perturb(base, 0.1, 5).pack() == perturb(base, 0.1, 5).pack());
  CHECK(perturb(base, 0.1, 5).pack() != perturb(base, 0.1, 6).pack());
  const GridState p = perturb(base, 0.1, 5);
  CHECK(p.lambda.isZero());
  CHECK(p.pack().cwiseAbs().maxCoeff() <= 0.1);
  CHECK(perturb(base, 0.0, 5).pack().isZero());
}

TEST_CASE("trace CSV layout") {
  NetworkTopology topo({0.2, 0.1}, {{0, 1, 1.0}});
  ControllerConfig cfg = ControllerConfig::defaults(topo, ControllerKind::ConventionalDroop);
  cfg = setpoints_for(topo, cfg, (Vec(2) << 0.1, 0.0).finished(), Vec::Ones(2));
  const Equilibrium eq = make_equilibrium(topo, cfg, (Vec(2) << 0.1, 0.0).finished(), Vec::Ones(2));
  IntegratorOptions opt;
  opt.t_end = 0.1;
  opt.dt = 0.01;
  opt.sample_every = 5;
  const Trace trace = integrate(topo, cfg, eq, perturb(equilibrium_state(cfg, eq), 0.01, 1), opt);
  std::ostringstream out;
  write_trace_csv(out, trace);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "t,theta_1,theta_2,omega_1,omega_2,V_1,V_2,xi_1,xi_2,P_1,P_2,Q_1,Q_2,S,C,CQ,dLyap,conserved");
  int rows = 0;
  std::string line;
  std::string last_row;
  while (std::getline(in, line)) {
    ++rows;
    last_row = line;
    CHECK(std::count(line.begin(), line.end(), ',') == 17);
    CHECK(line.back() != ',');
  }
  CHECK(rows == static_cast<int>(trace.records.size()));
  CHECK(rows == 3);
  std::istringstream last(last_row);
  std::string first;
  std::getline(last, first, ',');
  CHECK(std::stod(first) == doctest::Approx(0.1));
  CHECK(first.find('e') != std::string::npos);
}

TEST_CASE("equilibrium JSON round trip of key values") {
  std::mt19937_64 rng(81);
  const auto inst = testing_support::random_instance(rng, ControllerKind::ConventionalDroop);
  const Json doc = equilibrium_json(inst.topo, inst.cfg, inst.eq);
  REQUIRE(doc.contains("V_bar"));
  const auto v = doc.at("V_bar").get<std::vector<double>>();
  for (int i = 0; i < inst.topo.nodes(); ++i) CHECK(v[i] == inst.eq.v_bar(i));
  CHECK(doc.at("frequency_residual").get<double>() < 1e-12);
}
