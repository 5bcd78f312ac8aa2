#pragma once

#include <random>

#include "bregmangrid/config.hpp"
#include "bregmangrid/equilibrium.hpp"
#include "../oracles.hpp"

namespace testing_support {

using namespace bregmangrid;

/// Random gains and an equilibrium built from random angles and voltages.
struct Instance {
  NetworkTopology topo;
  ControllerConfig cfg;
  Equilibrium eq;
};

inline Instance random_instance(std::mt19937_64& rng, ControllerKind kind, int max_nodes = 6) {
  for (;;) {
    const int n = 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_nodes - 1));
    NetworkTopology topo = oracle::random_network(rng, n);
    ControllerConfig cfg = ControllerConfig::defaults(topo, kind);
    cfg.t_p = oracle::uniform_vec(rng, n, 0.2, 2.0);
    cfg.k_p = oracle::uniform_vec(rng, n, 0.5, 2.0);
    cfg.k_q = oracle::uniform_vec(rng, n, 0.5, 2.0);
    if (kind != ControllerKind::EArp) cfg.t_q = oracle::uniform_vec(rng, n, 0.2, 2.0);
    cfg.k_lambda = oracle::uniform_vec(rng, n, 0.5, 2.0);
    const Vec theta0 = oracle::uniform_vec(rng, n, -0.3, 0.3);
    const Vec v_bar = oracle::uniform_vec(rng, n, 0.9, 1.1);
    cfg = setpoints_for(topo, cfg, theta0, v_bar);
    try {
      cfg.validate(n);
    } catch (const std::exception&) {
      continue;
    }
    Equilibrium eq = make_equilibrium(topo, cfg, theta0, v_bar);
    return {std::move(topo), std::move(cfg), std::move(eq)};
  }
}

inline const ControllerKind kAllKinds[] = {ControllerKind::ConventionalDroop, ControllerKind::QuadraticDroop,
                                           ControllerKind::ReactiveCurrent, ControllerKind::EArp};

}  // namespace testing_support
