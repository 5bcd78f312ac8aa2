#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "bregmangrid/config.hpp"
#include "bregmangrid/equilibrium.hpp"
#include "bregmangrid/monitors.hpp"
#include "bregmangrid/simulator.hpp"
#include "bregmangrid/stability.hpp"
#include "bregmangrid/topology.hpp"

namespace bregmangrid {

using Json = nlohmann::json;

/// Reads and parses a JSON file. Throws InputError when unreadable or malformed.
Json read_json(const std::filesystem::path& path);

/// Network file: {"nodes": [{"id": 1, "shunt_b": 0.1}, ...],
///                "edges": [{"from": 1, "to": 2, "b": 5.0}, ...]}
/// Node ids are 1-based and consecutive.
NetworkTopology parse_network(const Json& doc);
NetworkTopology load_network(const std::filesystem::path& path);

/// Controller block of a scenario. Gains may be arrays or scalars; omitted
/// entries keep ControllerConfig::defaults.
ControllerConfig parse_controller(const Json& doc, const NetworkTopology& topology);

struct InitialCondition {
  enum class Type { Equilibrium, Perturbed, Explicit };
  Type type = Type::Equilibrium;
  double radius = 0.0;
  std::uint64_t seed = 0;
  Json explicit_values;  ///< arrays theta / omega / V / xi / lambda; missing ones take equilibrium values
};

struct SweepSpec {
  std::string parameter = "P_star";
  int index = 0;  ///< 0-based node
  double from = 0.0;
  double to = 0.0;
  int points = 2;
};

struct Scenario {
  std::filesystem::path network_path;
  std::optional<NetworkTopology> topology;
  ControllerConfig config;
  /// When set, the equilibrium is built from these angles and voltages and
  /// P*, u_Q are overwritten accordingly instead of running the solver.
  std::optional<Vec> construct_theta0;
  std::optional<Vec> construct_v_bar;
  NewtonOptions newton;
  InitialCondition initial;
  IntegratorOptions integration;
  std::optional<SweepSpec> sweep;
  std::string trace_file = "trace.csv";
  std::string report_file = "report.json";
};

/// Parses a scenario file. A relative "network" path is resolved against
/// the scenario's directory; `network_override` replaces it when given.
Scenario load_scenario(const std::filesystem::path& path,
                       const std::optional<std::filesystem::path>& network_override = std::nullopt);

/// Equilibrium from the scenario: constructed when requested, solved otherwise.
Equilibrium scenario_equilibrium(const Scenario& scenario, ControllerConfig& config);

/// Uniform perturbation in [-radius, radius] on theta, omega, V and xi, in that order.
GridState perturb(const GridState& state, double radius, std::uint64_t seed);

GridState initial_state(const Scenario& scenario, const ControllerConfig& config,
                        const Equilibrium& eq);

Json to_json(const Vec& v);
Json equilibrium_json(const NetworkTopology& topology, const ControllerConfig& config,
                      const Equilibrium& eq);
Json certificate_json(const Certificate& cert);
Json monitor_json(const Trace& trace, const DissipationReport& dissipation,
                  const ConservationReport& conservation, const SharingReport& sharing);

/// CSV trace with header t,theta_1..,omega_1..,V_1..,xi_1..,P_1..,Q_1..,S,C,CQ,dLyap,conserved
/// and %.12e values.
void write_trace_csv(std::ostream& out, const Trace& trace);

}  // namespace bregmangrid
