#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bregmangrid/errors.hpp"
#include "bregmangrid/io.hpp"
#include "bregmangrid/monitors.hpp"
#include "bregmangrid/simulator.hpp"
#include "bregmangrid/stability.hpp"

namespace fs = std::filesystem;
using namespace bregmangrid;

namespace {

enum Exit { kOk = 0, kBadInput = 1, kSolverFailure = 2, kAssumptionViolation = 3 };

int log_level() {
  const char* env = std::getenv("BREGMANGRID_LOG");
  if (!env) return 0;
  const std::string v(env);
  if (v == "debug" || v == "2") return 2;
  if (v == "info" || v == "1") return 1;
  return 0;
}

void log(int level, const std::string& msg) {
  if (log_level() >= level) std::cerr << "bregmangrid: " << msg << '\n';
}

struct Options {
  std::string scenario;
  std::string network;
  std::string out;
  std::optional<std::uint64_t> seed;
};

Scenario load(const Options& opt) {
  std::optional<fs::path> network;
  if (!opt.network.empty()) network = opt.network;
  Scenario sc = load_scenario(opt.scenario, network);
  if (opt.seed) {
    sc.initial.seed = *opt.seed;
    sc.newton.seed = *opt.seed;
  }
  log(1, "loaded " + opt.scenario + " (" + std::to_string(sc.topology->nodes()) + " nodes, " +
             std::to_string(sc.topology->edges()) + " lines)");
  return sc;
}

void emit(const Options& opt, const std::string& file, const Json& doc) {
  const std::string text = doc.dump(2) + "\n";
  if (opt.out.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(opt.out);
  std::ofstream f(fs::path(opt.out) / file);
  if (!f) throw InputError("cannot write " + (fs::path(opt.out) / file).string());
  f << text;
  log(1, "wrote " + (fs::path(opt.out) / file).string());
}

int cmd_equilibrium(const Options& opt) {
  Scenario sc = load(opt);
  ControllerConfig cfg = sc.config;
  const Equilibrium eq = scenario_equilibrium(sc, cfg);
  log(2, "equilibrium found after " + std::to_string(eq.iterations) + " iterations");
  emit(opt, "equilibrium.json", equilibrium_json(*sc.topology, cfg, eq));
  return kOk;
}

int cmd_certify(const Options& opt) {
  Scenario sc = load(opt);
  ControllerConfig cfg = sc.config;
  const Equilibrium eq = scenario_equilibrium(sc, cfg);
  const Certificate cert = certify(*sc.topology, cfg, eq);
  log(1, "verdict " + std::string(to_string(cert.verdict)));
  Json doc = certificate_json(cert);
  doc["equilibrium"] = equilibrium_json(*sc.topology, cfg, eq);
  emit(opt, "certificate.json", doc);
  return kOk;
}

int cmd_simulate(const Options& opt) {
  Scenario sc = load(opt);
  ControllerConfig cfg = sc.config;
  const Equilibrium eq = scenario_equilibrium(sc, cfg);
  const GridState init = initial_state(sc, cfg, eq);
  if ((init.V.array() <= sc.integration.v_min).any()) {
    throw DomainError("initial voltages must exceed the voltage floor");
  }
  const Trace trace = integrate(*sc.topology, cfg, eq, init, sc.integration);
  log(1, "integration " + std::string(to_string(trace.status)) + ", " +
             std::to_string(trace.records.size()) + " samples");

  const Json report = monitor_json(trace, dissipation_monitor(trace), conservation_monitor(trace, cfg),
                                   sharing_monitor(trace, cfg));
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    std::ofstream csv(fs::path(opt.out) / sc.trace_file);
    if (!csv) throw InputError("cannot write " + (fs::path(opt.out) / sc.trace_file).string());
    write_trace_csv(csv, trace);
  }
  emit(opt, sc.report_file, report);

  switch (trace.status) {
    case TraceStatus::Completed:
      return kOk;
    case TraceStatus::VoltageFloor:
      std::cerr << "bregmangrid-error: assumption: " << trace.message << '\n';
      return kAssumptionViolation;
    case TraceStatus::NonFinite:
      std::cerr << "bregmangrid-error: solver: " << trace.message << '\n';
      return kSolverFailure;
  }
  return kOk;
}

Json sweep_point(const Scenario& sc, double value) {
  ControllerConfig cfg = sc.config;
  const int i = sc.sweep->index;
  if (sc.sweep->parameter == "P_star") {
    cfg.p_star(i) = value;
  } else {
    cfg.u_q_bar(i) = value;
  }
  Json point{{"value", value}};
  try {
    const Equilibrium eq = solve_equilibrium(*sc.topology, cfg, sc.newton);
    const Certificate cert = certify(*sc.topology, cfg, eq);
    point["status"] = "ok";
    point["verdict"] = std::string(to_string(cert.verdict));
    point["hessian_min_eigenvalue"] = cert.hessian.min_eigenvalue;
    point["jacobian_max_real"] = cert.jacobian.max_real;
    point["max_abs_line_angle"] = eq.edge_angles(*sc.topology).cwiseAbs().maxCoeff();
  } catch (const SolverError& e) {
    point["status"] = "solver_failure";
    point["residual"] = e.residual();
  } catch (const ConfigError& e) {
    point["status"] = "config_error";
    point["message"] = e.what();
  }
  return point;
}

int cmd_sweep(const Options& opt) {
  const Scenario sc = load(opt);
  if (!sc.sweep) throw InputError("scenario has no 'sweep' block");
  const SweepSpec& spec = *sc.sweep;
  std::vector<std::future<Json>> jobs;
  for (int k = 0; k < spec.points; ++k) {
    const double value =
        spec.points == 1 ? spec.from : spec.from + (spec.to - spec.from) * k / (spec.points - 1);
    jobs.push_back(std::async(std::launch::async, sweep_point, std::cref(sc), value));
  }
  Json points = Json::array();
  for (auto& job : jobs) points.push_back(job.get());
  emit(opt, "sweep.json",
       Json{{"parameter", spec.parameter}, {"index", spec.index + 1}, {"points", points}});
  return kOk;
}

int fail(const char* kind, const std::string& msg, int code) {
  std::cerr << "bregmangrid-error: " << kind << ": " << msg << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microgrid voltage-controller simulation and stability certificates"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", opt.scenario, "Scenario JSON file")->required();
    sub->add_option("--network", opt.network, "Network JSON file (overrides the scenario's)");
    sub->add_option("--out", opt.out, "Output directory (stdout when omitted)");
    sub->add_option("--seed", seed, "Seed for perturbations and solver restarts");
  };
  CLI::App* equilibrium = app.add_subcommand("equilibrium", "Solve for the synchronous equilibrium");
  CLI::App* certify_cmd = app.add_subcommand("certify", "Certify stability of the equilibrium");
  CLI::App* simulate = app.add_subcommand("simulate", "Integrate the closed loop and run monitors");
  CLI::App* sweep = app.add_subcommand("sweep", "Re-certify over a grid of one parameter");
  for (CLI::App* sub : {equilibrium, certify_cmd, simulate, sweep}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kBadInput);
  }
  for (CLI::App* sub : {equilibrium, certify_cmd, simulate, sweep}) {
    if (sub->count("--seed")) opt.seed = seed;
  }

  try {
    if (*equilibrium) return cmd_equilibrium(opt);
    if (*certify_cmd) return cmd_certify(opt);
    if (*simulate) return cmd_simulate(opt);
    if (*sweep) return cmd_sweep(opt);
  } catch (const InputError& e) {
    return fail("input", e.what(), kBadInput);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), kBadInput);
  } catch (const SolverError& e) {
    return fail("solver", e.what(), kSolverFailure);
  } catch (const DomainError& e) {
    return fail("assumption", e.what(), kAssumptionViolation);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kSolverFailure);
  }
  return kOk;
}
