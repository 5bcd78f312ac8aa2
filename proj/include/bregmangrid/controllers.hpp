#pragma once

#include "bregmangrid/config.hpp"
#include "bregmangrid/equilibrium.hpp"
#include "bregmangrid/state.hpp"
#include "bregmangrid/topology.hpp"
#include "bregmangrid/types.hpp"

namespace bregmangrid {

/// Right side f(V, Q, u_Q) of T_Q dV/dt for the configured controller:
///   conventional droop  -V - K_Q Q + u_Q
///   quadratic droop     -K_Q Q - [V](V - u_Q)
///   reactive current    -[V]^{-1} Q + u_Q
///   EArp                -[V] K_Q L_Q K_Q Q + [V] u_Q
Vec voltage_field(const ControllerConfig& config, const Vec& V, const Vec& Q, const Vec& u_q);

/// Right side of T_P d(omega)/dt: -(omega - omega*) - K_P(P - P*) + u_P.
Vec frequency_field(const ControllerConfig& config, const Vec& omega, const Vec& P, const Vec& u_p);

struct SecondaryField {
  Vec xi_dot;  ///< -L_P xi + K_P^{-1}(omega* - omega)
  Vec u_p;     ///< = xi
};
SecondaryField secondary_field(const ControllerConfig& config, const Vec& xi, const Vec& omega);

/// Diagonal of R_2, the voltage block of the supply-rate input weight:
/// identity for conventional droop and reactive current, [V] otherwise.
Vec supply_weight_r2(const ControllerConfig& config, const Vec& V);

/// Voltage block X(V) of the dissipation: T_Q^{-1}K_Q[V], T_Q^{-1}K_Q[V],
/// T_Q^{-1}, [V]K_Q L_Q K_Q[V] for the four kinds.
Mat dissipation_weight_x(const ControllerConfig& config, const Vec& V);

struct DynamicUqField {
  Vec rhs;  ///< right side of T_Q d(lambda)/dt = -R_2 dS/dV
  Vec u_q;  ///< K_lambda lambda
};
/// Needs theta and V of `state` (through Q) and lambda.
DynamicUqField dynamic_uq_field(const NetworkTopology& topology, const ControllerConfig& config,
                                const GridState& state, const Equilibrium& eq);

}  // namespace bregmangrid
