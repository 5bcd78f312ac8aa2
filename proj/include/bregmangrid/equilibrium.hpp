#pragma once

#include <cstdint>
#include <vector>

#include "bregmangrid/config.hpp"
#include "bregmangrid/topology.hpp"
#include "bregmangrid/types.hpp"

namespace bregmangrid {

/// Synchronous solution theta(t) = theta0 + omega0 t, omega = omega0 1, V = v_bar.
struct Equilibrium {
  Vec theta0;
  double omega0 = 0.0;
  Vec v_bar;
  Vec u_p_bar;
  Vec u_q_bar;
  Vec p_bar;
  Vec q_bar;
  Vec xi_bar;

  double frequency_residual = 0.0;  ///< ||-(omega0 - omega*) - K_P(P - P*) + u_P||_inf
  double voltage_residual = 0.0;    ///< ||f(V, Q, u_Q)||_inf
  bool in_security_region = true;   ///< |eta_k| < pi/2 for every line
  int iterations = 0;
  int start = 0;  ///< 0 = flat start, k > 0 = k-th random restart

  Vec edge_angles(const NetworkTopology& topology) const { return topology.edge_angles(theta0); }
};

/// Fills inputs, injections and residuals for a given (theta0, V) pair at
/// omega0 = omega*. Used both by the solver and to construct equilibria
/// directly from chosen angles and voltages.
Equilibrium make_equilibrium(const NetworkTopology& topology, const ControllerConfig& config,
                             const Vec& theta0, const Vec& v_bar);

/// Copy of `config` whose P* and u_Q make (theta0, v_bar) an equilibrium:
/// P* = P(theta0, v_bar), and u_Q solves f(v_bar, Q, u_Q) = 0. The angles
/// may lie outside the security region.
ControllerConfig setpoints_for(const NetworkTopology& topology, const ControllerConfig& config,
                               const Vec& theta0, const Vec& v_bar);

/// Steady state of the dynamic u_Q controller: K_lambda^{-1}(u_Q - R_2(V)^{-1} d).
Vec lambda_bar(const ControllerConfig& config, const Equilibrium& eq);

struct NewtonOptions {
  double tolerance = 1e-10;
  int max_iterations = 50;
  int restarts = 10;
  std::uint64_t seed = 0;
};

/// Newton iteration on (phi, V) for the two feasibility equations with the
/// optimal feedforward input. Flat start first, then random restarts with
/// V in [0.8, 1.2]^n and phi in [-0.3, 0.3]^{n-1}. Throws SolverError with the
/// smallest final residual when no start converges.
Equilibrium solve_equilibrium(const NetworkTopology& topology, const ControllerConfig& config,
                              const NewtonOptions& options = {});

/// Runs every start (flat and all restarts) and returns the distinct
/// converged equilibria, flat-start solution first when it converged.
std::vector<Equilibrium> find_equilibria(const NetworkTopology& topology,
                                         const ControllerConfig& config,
                                         const NewtonOptions& options = {});

}  // namespace bregmangrid
