#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bregmangrid/config.hpp"
#include "bregmangrid/equilibrium.hpp"
#include "bregmangrid/state.hpp"
#include "bregmangrid/topology.hpp"
#include "bregmangrid/types.hpp"

namespace bregmangrid {

/// Closed-loop state sitting at the equilibrium (xi = xi_bar, lambda = lambda_bar).
GridState equilibrium_state(const ControllerConfig& config, const Equilibrium& eq);

struct RhsOptions {
  /// Integrate the plain lossless model even when phi_loss < pi/2. Serves as
  /// the reference for the compensated lossy model.
  bool bypass_loss_transform = false;
};

/// Time derivative of the closed-loop state. Throws DomainError if V <= 0.
GridState rhs(const NetworkTopology& topology, const ControllerConfig& config,
              const Equilibrium& eq, const GridState& state, const RhsOptions& options = {});

/// Closed-form d/dt of S + C + C_Q along the closed loop.
double lyapunov_rate(const NetworkTopology& topology, const ControllerConfig& config,
                     const Equilibrium& eq, const GridState& state);

struct IntegratorOptions {
  double t_end = 10.0;
  double dt = 1e-3;
  int sample_every = 1;
  double v_min = 1e-6;
  RhsOptions rhs;
};

enum class TraceStatus { Completed, VoltageFloor, NonFinite };
std::string_view to_string(TraceStatus status);

struct TraceRecord {
  double t = 0.0;
  GridState state;
  Vec P;
  Vec Q;
  Vec P_ell;  ///< measured lossy injections (equal to P, Q when lossless)
  Vec Q_ell;
  double S = 0.0;  ///< Bregman storage relative to the equilibrium
  double C = 0.0;
  double C_Q = 0.0;
  double lyapunov_rate = 0.0;
  double numeric_rate = 0.0;  ///< same rate by differencing along the flow (NaN if not computable)
  double conserved = 0.0;  ///< 1^T K_Q^{-1} ln V
  double rhs_norm = 0.0;   ///< max |d/dt| over omega, V, xi, lambda
};

struct Trace {
  std::vector<TraceRecord> records;
  TraceStatus status = TraceStatus::Completed;
  std::string message;
  double dt = 0.0;
  int sample_every = 1;

  const TraceRecord& last() const { return records.back(); }
};

/// Classical fixed-step RK4. Records the initial state, every
/// `sample_every`-th step and the final step. Stops early, keeping the last
/// valid record, when some V drops to v_min or the state stops being finite.
Trace integrate(const NetworkTopology& topology, const ControllerConfig& config,
                const Equilibrium& eq, const GridState& initial, const IntegratorOptions& options);

}  // namespace bregmangrid
