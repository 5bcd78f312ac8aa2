#include "bregmangrid/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "bregmangrid/errors.hpp"

namespace bregmangrid {

namespace {

Vec vector_field(const Json& doc, const char* key, int n, const Vec& fallback) {
  if (!doc.contains(key)) return fallback;
  const Json& value = doc.at(key);
  if (value.is_number()) return Vec::Constant(n, value.get<double>());
  if (!value.is_array() || static_cast<int>(value.size()) != n) {
    throw InputError(std::string("'") + key + "' must be a number or an array of " + std::to_string(n) +
                     " numbers");
  }
  Vec out(n);
  for (int i = 0; i < n; ++i) out(i) = value.at(i).get<double>();
  return out;
}

Vec required_vector(const Json& doc, const char* key, int n) {
  if (!doc.contains(key)) throw InputError(std::string("missing '") + key + "'");
  return vector_field(doc, key, n, Vec());
}

// {"edges": [{"from": 1, "to": 2, "w": 1.0}]} with 1-based node ids.
Mat parse_laplacian(const Json& doc, int n) {
  if (!doc.is_object() || !doc.contains("edges")) throw InputError("Laplacian needs an 'edges' list");
  Mat l = Mat::Zero(n, n);
  for (const Json& e : doc.at("edges")) {
    const int i = e.at("from").get<int>() - 1;
    const int j = e.at("to").get<int>() - 1;
    const double w = e.value("w", 1.0);
    if (i < 0 || j < 0 || i >= n || j >= n || i == j) throw InputError("Laplacian edge has invalid endpoints");
    l(i, j) -= w;
    l(j, i) -= w;
    l(i, i) += w;
    l(j, j) += w;
  }
  return l;
}

double uniform(std::mt19937_64& rng, double radius) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return radius * (2.0 * u - 1.0);
}

void perturb_block(Vec& v, double radius, std::mt19937_64& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += uniform(rng, radius);
}

}  // namespace

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

NetworkTopology parse_network(const Json& doc) {
  try {
    const Json& nodes = doc.at("nodes");
    const int n = static_cast<int>(nodes.size());
    std::vector<double> shunt(n, -1.0);
    for (const Json& node : nodes) {
      const int id = node.at("id").get<int>();
      if (id < 1 || id > n) throw InputError("node ids must be consecutive from 1");
      if (shunt[id - 1] >= 0.0) throw InputError("duplicate node id " + std::to_string(id));
      shunt[id - 1] = node.value("shunt_b", 0.0);
      if (shunt[id - 1] < 0.0) throw ConfigError("negative shunt at node " + std::to_string(id));
    }
    std::vector<Edge> edges;
    for (const Json& e : doc.value("edges", Json::array())) {
      edges.push_back({e.at("from").get<int>() - 1, e.at("to").get<int>() - 1, e.at("b").get<double>()});
    }
    return NetworkTopology(std::move(shunt), std::move(edges));
  } catch (const Json::exception& e) {
    throw InputError(std::string("network: ") + e.what());
  }
}

NetworkTopology load_network(const std::filesystem::path& path) { return parse_network(read_json(path)); }

ControllerConfig parse_controller(const Json& doc, const NetworkTopology& topology) {
  const int n = topology.nodes();
  try {
    const auto kind = parse_controller_kind(doc.at("kind").get<std::string>());
    if (!kind) throw InputError("unknown controller kind '" + doc.at("kind").get<std::string>() + "'");
    ControllerConfig cfg = ControllerConfig::defaults(topology, *kind);
    cfg.t_p = vector_field(doc, "T_P", n, cfg.t_p);
    cfg.t_q = vector_field(doc, "T_Q", n, cfg.t_q);
    cfg.k_p = vector_field(doc, "K_P", n, cfg.k_p);
    cfg.k_q = vector_field(doc, "K_Q", n, cfg.k_q);
    cfg.k_lambda = vector_field(doc, "K_lambda", n, cfg.k_q);
    cfg.p_star = vector_field(doc, "P_star", n, cfg.p_star);
    cfg.u_q_bar = vector_field(doc, "u_Q_bar", n, cfg.u_q_bar);
    cfg.omega_star = doc.value("omega_star", cfg.omega_star);
    cfg.phi_loss = doc.value("phi_loss", cfg.phi_loss);
    cfg.use_secondary = doc.value("use_secondary", cfg.use_secondary);
    cfg.use_dynamic_uq = doc.value("use_dynamic_uq", cfg.use_dynamic_uq);
    cfg.earp_log_level = doc.value("earp_log_level", cfg.earp_log_level);
    if (doc.contains("L_P")) cfg.l_p = parse_laplacian(doc.at("L_P"), n);
    if (doc.contains("L_Q")) cfg.l_q = parse_laplacian(doc.at("L_Q"), n);
    if (doc.contains("voltage_disturbance")) {
      cfg.voltage_disturbance = vector_field(doc, "voltage_disturbance", n, Vec());
    }
    return cfg;
  } catch (const Json::exception& e) {
    throw InputError(std::string("controller: ") + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path,
                       const std::optional<std::filesystem::path>& network_override) {
  const Json doc = read_json(path);
  Scenario sc;
  try {
    if (network_override) {
      sc.network_path = *network_override;
    } else {
      sc.network_path = doc.at("network").get<std::string>();
      if (sc.network_path.is_relative()) sc.network_path = path.parent_path() / sc.network_path;
    }
    sc.topology = load_network(sc.network_path);
    const int n = sc.topology->nodes();
    sc.config = parse_controller(doc.at("controller"), *sc.topology);

    if (doc.contains("equilibrium")) {
      const Json& e = doc.at("equilibrium");
      if (e.contains("construct")) {
        sc.construct_theta0 = required_vector(e.at("construct"), "theta0", n);
        sc.construct_v_bar = required_vector(e.at("construct"), "V_bar", n);
      }
      sc.newton.tolerance = e.value("tolerance", sc.newton.tolerance);
      sc.newton.max_iterations = e.value("max_iterations", sc.newton.max_iterations);
      sc.newton.restarts = e.value("restarts", sc.newton.restarts);
      sc.newton.seed = e.value("seed", sc.newton.seed);
    }

    if (doc.contains("initial")) {
      const Json& init = doc.at("initial");
      const std::string type = init.value("type", "equilibrium");
      if (type == "equilibrium") {
        sc.initial.type = InitialCondition::Type::Equilibrium;
      } else if (type == "perturbed") {
        sc.initial.type = InitialCondition::Type::Perturbed;
        sc.initial.radius = init.at("radius").get<double>();
        sc.initial.seed = init.value("seed", std::uint64_t{0});
        if (sc.initial.radius < 0.0) throw InputError("perturbation radius must be >= 0");
      } else if (type == "explicit") {
        sc.initial.type = InitialCondition::Type::Explicit;
        sc.initial.explicit_values = init;
      } else {
        throw InputError("unknown initial type '" + type + "'");
      }
    }

    if (doc.contains("simulation")) {
      const Json& sim = doc.at("simulation");
      sc.integration.t_end = sim.value("t_end", sc.integration.t_end);
      sc.integration.dt = sim.value("dt", sc.integration.dt);
      sc.integration.sample_every = sim.value("sample_every", sc.integration.sample_every);
      if (!(sc.integration.dt > 0.0)) throw InputError("dt must be > 0");
      if (sc.integration.t_end < 0.0) throw InputError("t_end must be >= 0");
      if (sc.integration.sample_every < 1) throw InputError("sample_every must be >= 1");
    }

    if (doc.contains("sweep")) {
      const Json& sw = doc.at("sweep");
      SweepSpec spec;
      spec.parameter = sw.value("parameter", spec.parameter);
      spec.index = sw.value("index", 1) - 1;
      spec.from = sw.at("from").get<double>();
      spec.to = sw.at("to").get<double>();
      spec.points = sw.value("points", spec.points);
      if (spec.parameter != "P_star" && spec.parameter != "u_Q_bar") {
        throw InputError("sweep parameter must be P_star or u_Q_bar");
      }
      if (spec.index < 0 || spec.index >= n) throw InputError("sweep index out of range");
      if (spec.points < 1) throw InputError("sweep needs at least one point");
      sc.sweep = spec;
    }

    if (doc.contains("outputs")) {
      sc.trace_file = doc.at("outputs").value("trace", sc.trace_file);
      sc.report_file = doc.at("outputs").value("report", sc.report_file);
    }
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return sc;
}

Equilibrium scenario_equilibrium(const Scenario& scenario, ControllerConfig& config) {
  const NetworkTopology& topology = *scenario.topology;
  if (scenario.construct_theta0) {
    config = setpoints_for(topology, config, *scenario.construct_theta0, *scenario.construct_v_bar);
    config.validate(topology.nodes());
    return make_equilibrium(topology, config, *scenario.construct_theta0, *scenario.construct_v_bar);
  }
  return solve_equilibrium(topology, config, scenario.newton);
}

GridState perturb(const GridState& state, double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GridState out = state;
  perturb_block(out.theta, radius, rng);
  perturb_block(out.omega, radius, rng);
  perturb_block(out.V, radius, rng);
  perturb_block(out.xi, radius, rng);
  return out;
}

GridState initial_state(const Scenario& scenario, const ControllerConfig& config,
                        const Equilibrium& eq) {
  const GridState base = equilibrium_state(config, eq);
  switch (scenario.initial.type) {
    case InitialCondition::Type::Equilibrium:
      return base;
    case InitialCondition::Type::Perturbed:
      return perturb(base, scenario.initial.radius, scenario.initial.seed);
    case InitialCondition::Type::Explicit: {
      const Json& v = scenario.initial.explicit_values;
      const int n = static_cast<int>(base.theta.size());
      try {
        return {vector_field(v, "theta", n, base.theta), vector_field(v, "omega", n, base.omega),
                vector_field(v, "V", n, base.V), vector_field(v, "xi", n, base.xi),
                vector_field(v, "lambda", n, base.lambda)};
      } catch (const Json::exception& e) {
        throw InputError(std::string("initial: ") + e.what());
      }
    }
  }
  return base;
}

Json to_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json equilibrium_json(const NetworkTopology& topology, const ControllerConfig& config,
                      const Equilibrium& eq) {
  return Json{{"controller", std::string(to_string(config.kind))},
              {"theta0", to_json(eq.theta0)},
              {"omega0", eq.omega0},
              {"V_bar", to_json(eq.v_bar)},
              {"line_angles", to_json(eq.edge_angles(topology))},
              {"P_bar", to_json(eq.p_bar)},
              {"Q_bar", to_json(eq.q_bar)},
              {"u_P_bar", to_json(eq.u_p_bar)},
              {"u_Q_bar", to_json(eq.u_q_bar)},
              {"P_star", to_json(config.p_star)},
              {"frequency_residual", eq.frequency_residual},
              {"voltage_residual", eq.voltage_residual},
              {"in_security_region", eq.in_security_region},
              {"iterations", eq.iterations},
              {"start", eq.start}};
}

Json certificate_json(const Certificate& cert) {
  Json rows = Json::array();
  for (const auto& r : cert.gershgorin.rows) {
    rows.push_back({{"node", r.node + 1}, {"m_ii", r.m_ii}, {"radius", r.radius}, {"pass", r.pass}});
  }
  Json gershgorin{{"precondition_ok", cert.gershgorin.precondition_ok},
                  {"pass", cert.gershgorin.pass},
                  {"rows", rows}};
  if (!cert.gershgorin.reason.empty()) gershgorin["reason"] = cert.gershgorin.reason;

  Json cutset = nullptr;
  if (cert.cutset) {
    Json lines = Json::array();
    for (const auto& v : cert.cutset->values) {
      lines.push_back({{"line", v.edge + 1}, {"sin2", v.sin2}, {"beta_cos", v.beta_cos}});
    }
    cutset = {{"lines", lines},
              {"security_violation", cert.cutset->security_violation},
              {"center_min_eigenvalue", cert.cutset->center_min_eigenvalue},
              {"test_vector_value", cert.cutset->test_vector_value}};
  }

  Json spectrum = Json::array();
  for (const auto& z : cert.jacobian.eigenvalues) spectrum.push_back({z.real(), z.imag()});

  return Json{{"verdict", std::string(to_string(cert.verdict))},
              {"gershgorin", gershgorin},
              {"hessian_min_eigenvalue", cert.hessian.min_eigenvalue},
              {"hessian_positive_definite", cert.hessian.positive_definite},
              {"cutset_witness", cutset},
              {"cutsets_exhaustive", cert.cutsets_exhaustive},
              {"jacobian",
               {{"max_real", cert.jacobian.max_real},
                {"unstable", cert.jacobian.unstable},
                {"informational", cert.jacobian.informational},
                {"factorization_mismatch", cert.jacobian.factorization_mismatch},
                {"spectrum", spectrum}}}};
}

Json monitor_json(const Trace& trace, const DissipationReport& dissipation,
                  const ConservationReport& conservation, const SharingReport& sharing) {
  Json cons = {{"applicable", conservation.applicable}};
  if (conservation.applicable) cons["drift"] = conservation.drift;
  Json share = {{"steady", sharing.steady}, {"active_deviation", sharing.active_deviation}};
  if (sharing.reactive_applicable) {
    share["reactive_identity"] = sharing.reactive_identity;
    share["reactive_deviation"] = sharing.reactive_deviation;
  }
  if (sharing.lossy) {
    share["lossy_active_deviation"] = sharing.lossy_active_deviation;
    share["lossy_reactive_deviation"] = sharing.lossy_reactive_deviation;
  }
  const TraceRecord& last = trace.last();
  return Json{{"status", std::string(to_string(trace.status))},
              {"message", trace.message},
              {"samples", trace.records.size()},
              {"t_final", last.t},
              {"omega_final", to_json(last.state.omega)},
              {"V_final", to_json(last.state.V)},
              {"dissipation",
               {{"rates_match", dissipation.rates_match},
                {"max_rate_mismatch", dissipation.max_rate_mismatch},
                {"rate_tolerance", dissipation.rate_tolerance},
                {"nonincreasing", dissipation.nonincreasing},
                {"max_increase", dissipation.max_increase},
                {"slack", dissipation.slack},
                {"rate_nonpositive", dissipation.rate_nonpositive},
                {"initial_value", dissipation.initial_value}}},
              {"conservation", cons},
              {"sharing", share}};
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  if (trace.records.empty()) return;
  const auto n = trace.records.front().state.theta.size();
  std::string header = "t";
  for (const char* block : {"theta", "omega", "V", "xi", "P", "Q"}) {
    for (Eigen::Index i = 1; i <= n; ++i) header += std::string(",") + block + "_" + std::to_string(i);
  }
  header += ",S,C,CQ,dLyap,conserved\n";
  out << header;

  char buf[32];
  auto put = [&](double v, bool first = false) {
    std::snprintf(buf, sizeof buf, "%.12e", v);
    if (!first) out << ',';
    out << buf;
  };
  for (const auto& r : trace.records) {
    put(r.t, true);
    for (const Vec* v : {&r.state.theta, &r.state.omega, &r.state.V, &r.state.xi, &r.P, &r.Q}) {
      for (Eigen::Index i = 0; i < v->size(); ++i) put((*v)(i));
    }
    put(r.S);
    put(r.C);
    put(r.C_Q);
    put(r.lyapunov_rate);
    put(r.conserved);
    out << '\n';
  }
}

}  // namespace bregmangrid
