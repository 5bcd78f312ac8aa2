#pragma once

#include "bregmangrid/config.hpp"
#include "bregmangrid/equilibrium.hpp"
#include "bregmangrid/state.hpp"
#include "bregmangrid/topology.hpp"
#include "bregmangrid/types.hpp"

namespace bregmangrid {

/// Storage values and gradients at one state, relative to an equilibrium.
struct StorageEvaluation {
  double U = 0.0;        ///< energy function at the state
  double H = 0.0;        ///< controller shaping term at the state
  double S = 0.0;        ///< U + H
  double bregman = 0.0;  ///< S - S_bar - grad S_bar^T (x - x_bar)
  Vec grad_theta;        ///< P - P_bar
  Vec grad_omega;        ///< K_P^{-1} T_P (omega - omega_bar)
  Vec grad_V;
  double C = 0.0;    ///< secondary controller storage
  double C_Q = 0.0;  ///< dynamic u_Q storage
};

/// U = 1/2 omega^T K_P^{-1} T_P omega + 1/2 V^T A(cos(D^T theta)) V.
double energy_U(const NetworkTopology& topology, const ControllerConfig& config, const Vec& theta,
                const Vec& omega, const Vec& V);

/// Shaping term per controller kind:
///   conventional droop  1^T K_Q^{-1} V - (Q_bar + K_Q^{-1} V_bar)^T ln V
///   quadratic droop     1/2 V^T K_Q^{-1} V
///   reactive current    0
///   EArp                -Q_bar^T ln V
double shaping_H(const ControllerConfig& config, const Vec& V, const Equilibrium& eq);
Vec shaping_H_gradient(const ControllerConfig& config, const Vec& V, const Equilibrium& eq);
/// Diagonal of the (diagonal) Hessian of H, the vector h(V).
Vec shaping_H_curvature(const ControllerConfig& config, const Vec& V, const Equilibrium& eq);

/// dS/dV - dS/dV at the equilibrium, given Q at the state.
Vec bregman_gradient_v(const NetworkTopology& topology, const ControllerConfig& config, const Vec& V,
                       const Vec& Q, const Equilibrium& eq);

StorageEvaluation bregman_S(const NetworkTopology& topology, const ControllerConfig& config,
                            const GridState& state, const Equilibrium& eq);

/// Bregman storage in reduced coordinates; equals bregman_S at theta with to_phi(theta) = phi.
double bregman_phi(const NetworkTopology& topology, const ControllerConfig& config, const Vec& phi,
                   const Vec& omega, const Vec& V, const Equilibrium& eq);

struct ReducedGradient {
  Vec phi;
  Vec V;
};
ReducedGradient bregman_gradient_phi(const NetworkTopology& topology, const ControllerConfig& config,
                                     const Vec& phi, const Vec& V, const Equilibrium& eq);

/// 1/2 |xi - xi_bar|^2.
double secondary_storage_C(const Vec& xi, const Vec& xi_bar);
/// 1/2 (lambda - lambda_bar)^T K_lambda (lambda - lambda_bar).
double dynamic_storage_CQ(const ControllerConfig& config, const Vec& lambda, const Vec& lambda_bar);

/// (phi, V) block of the storage Hessian, size (2n-1) x (2n-1):
///   [ D_1 Gamma [cos eta] D_1^T          D_1 [sin eta] Gamma |D|^T [V]^{-1} ]
///   [ (transpose)                         A(cos eta) + [h(V)]                ]
/// The omega block K_P^{-1} T_P is always positive definite and omitted.
Mat hessian(const NetworkTopology& topology, const ControllerConfig& config, const Vec& phi,
            const Vec& V, const Equilibrium& eq);

/// Full (phi, omega, V) Hessian, size (3n-1) x (3n-1).
Mat full_hessian(const NetworkTopology& topology, const ControllerConfig& config, const Vec& phi,
                 const Vec& V, const Equilibrium& eq);

}  // namespace bregmangrid
