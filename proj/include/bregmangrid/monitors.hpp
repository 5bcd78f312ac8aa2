#pragma once

#include <string>
#include <vector>

#include "bregmangrid/config.hpp"
#include "bregmangrid/simulator.hpp"

namespace bregmangrid {

struct DissipationReport {
  std::vector<double> numeric_rate;  ///< differenced d/dt of S + C + C_Q per sample
  double max_rate_mismatch = 0.0;    ///< max |numeric - closed form|
  double rate_tolerance = 0.0;       ///< 1e-6 max |closed form|, floored at 1e-12
  bool rates_match = true;
  double initial_value = 0.0;
  double max_increase = 0.0;  ///< largest rise of S + C + C_Q between consecutive samples
  double slack = 0.0;         ///< 1e-9 initial value
  bool nonincreasing = true;
  bool rate_nonpositive = true;  ///< closed-form rate <= slack at every sample
};

/// Checks the closed-form storage rate against the per-sample differenced
/// rate (a 5-point stencil of short RK4 sub-steps around each sample, so the
/// check does not depend on the output sampling) and scans the trace for
/// monotone decrease.
DissipationReport dissipation_monitor(const Trace& trace);

struct ConservationReport {
  bool applicable = false;  ///< EArp only
  double drift = 0.0;       ///< max |1^T K_Q^{-1} ln V(t) - same at t = 0|
};
ConservationReport conservation_monitor(const Trace& trace, const ControllerConfig& config);

struct SharingReport {
  bool steady = false;  ///< max |d/dt| < 1e-8 over the final second
  double active_deviation = 0.0;  ///< max_i,j |k_P,i P_i - k_P,j P_j|
  bool reactive_applicable = false;
  std::string reactive_identity;
  double reactive_deviation = 0.0;
  bool lossy = false;
  double lossy_active_deviation = 0.0;    ///< same with P_ell
  double lossy_reactive_deviation = 0.0;  ///< k_Q Q_ell
};

/// Terminal power sharing. The reactive identity depends on the controller:
///   EArp               k_Q,i Q_i
///   conventional droop (k_Q,i Q_i + V_i) / u_Q,i
///   quadratic droop    (k_Q,i Q_i / V_i + V_i) / u_Q,i
///   reactive current   (Q_i / V_i) / u_Q,i
SharingReport sharing_monitor(const Trace& trace, const ControllerConfig& config);

/// max - min of the entries; 0 for empty or single-entry vectors.
double spread(const Vec& values);

}  // namespace bregmangrid
