#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "bregmangrid/topology.hpp"
#include "bregmangrid/types.hpp"

namespace bregmangrid {

enum class ControllerKind { ConventionalDroop, QuadraticDroop, ReactiveCurrent, EArp };

std::string_view to_string(ControllerKind kind);
/// Accepts "conventional_droop", "quadratic_droop", "reactive_current", "earp"
/// (case-insensitive, '-' treated as '_').
std::optional<ControllerKind> parse_controller_kind(std::string_view text);

/// Closed-loop controller parameters. Diagonal matrices are stored as vectors.
struct ControllerConfig {
  ControllerKind kind = ControllerKind::ConventionalDroop;

  Vec t_p;  ///< frequency time constants
  Vec t_q;  ///< voltage time constants (all ones for EArp)
  Vec k_p;  ///< active droop gains
  Vec k_q;  ///< reactive droop gains
  double omega_star = 0.0;
  Vec p_star;
  Vec u_q_bar;

  Mat l_p;  ///< communication Laplacian of the secondary controller
  Mat l_q;  ///< communication Laplacian of the EArp averaging
  Vec k_lambda;

  double phi_loss = kHalfPi;  ///< pi/2 is lossless
  bool use_secondary = true;
  bool use_dynamic_uq = false;

  /// Constant additive disturbance on the right side of T_Q dV/dt (empty = none).
  Vec voltage_disturbance;

  /// Level c of the conserved quantity 1^T K_Q^{-1} ln V used to pin one EArp
  /// equilibrium out of its one-parameter family.
  double earp_log_level = 0.0;

  /// Unit gains, unit time constants, P* = 0, u_Q = 1 (0 for EArp) and both
  /// communication graphs equal to the electrical graph with unit weights.
  static ControllerConfig defaults(const NetworkTopology& topology, ControllerKind kind);

  /// Throws ConfigError on dimension mismatch, non-positive gains, invalid
  /// Laplacians, non-identity T_Q for EArp, u_Q <= 0 for conventional droop,
  /// or 1^T K_Q^{-1} u_Q != 0 for EArp.
  void validate(int nodes) const;

  bool lossless() const { return phi_loss == kHalfPi; }
  bool has_disturbance() const { return voltage_disturbance.size() > 0; }
};

}  // namespace bregmangrid
