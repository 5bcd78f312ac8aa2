#pragma once

#include "bregmangrid/topology.hpp"
#include "bregmangrid/types.hpp"

namespace bregmangrid {

/// Active and reactive injections at every node.
struct PowerInjection {
  Vec P;
  Vec Q;
};

/// P = D Gamma(V) sin(D^T theta).
Vec active_power(const NetworkTopology& topology, const Vec& theta, const Vec& voltage);
/// P_i = sum_j B_ij V_i V_j sin(theta_i - theta_j), summed node by node.
Vec active_power_elementwise(const NetworkTopology& topology, const Vec& theta, const Vec& voltage);

/// Q = [V] A(cos(D^T theta)) V.
Vec reactive_power(const NetworkTopology& topology, const Vec& theta, const Vec& voltage);
/// Q = [V][A_0]V - |D| Gamma(V) cos(D^T theta).
Vec reactive_power_incidence_form(const NetworkTopology& topology, const Vec& theta,
                                  const Vec& voltage);
/// Q_i = B_ii V_i^2 - sum_j B_ij V_i V_j cos(theta_i - theta_j), node by node.
Vec reactive_power_elementwise(const NetworkTopology& topology, const Vec& theta,
                               const Vec& voltage);

PowerInjection power_injection(const NetworkTopology& topology, const Vec& theta,
                               const Vec& voltage);

/// (sin phi, cos phi) with the two endpoints of [0, pi/2] evaluated exactly.
struct LossRotation {
  double sin_phi = 1.0;
  double cos_phi = 0.0;
};
LossRotation loss_rotation(double phi_loss);

/// Per node (P_l, Q_l) = Phi(phi) (P, Q), Phi = [[sin, cos], [-cos, sin]].
PowerInjection lossy_transform(const Vec& P, const Vec& Q, double phi_loss);
/// Inverse rotation: P = P_l sin - Q_l cos, Q = P_l cos + Q_l sin.
PowerInjection inverse_lossy_transform(const Vec& P_ell, const Vec& Q_ell, double phi_loss);

/// Optimal constant input u_P = -1 (1^T P*) / (1^T K_P^{-1} 1), K_P given by its diagonal.
Vec optimal_feedforward(const Vec& k_p, const Vec& p_star);

/// Steady injections enforced by the optimal input: (I - K_P^{-1} 1 1^T / 1^T K_P^{-1} 1) P*.
Vec balanced_injection(const Vec& k_p, const Vec& p_star);

/// || Gamma(V)^{-1} D^+ balanced_injection ||_inf on a tree. A value < 1
/// certifies solvability of the angle equation at the given voltages.
/// Throws DomainError if the topology is not a tree.
double tree_feasibility_margin(const NetworkTopology& topology, const Vec& v_bar, const Vec& k_p,
                               const Vec& p_star);

}  // namespace bregmangrid
