#include "bregmangrid/controllers.hpp"

#include "bregmangrid/errors.hpp"
#include "bregmangrid/power_flow.hpp"
#include "bregmangrid/storage.hpp"

namespace bregmangrid {

Vec voltage_field(const ControllerConfig& config, const Vec& V, const Vec& Q, const Vec& u_q) {
  if ((V.array() <= 0.0).any() || !V.allFinite()) {
    throw DomainError("voltage_field: voltages must be strictly positive");
  }
  switch (config.kind) {
    case ControllerKind::ConventionalDroop:
      return -V - config.k_q.cwiseProduct(Q) + u_q;
    case ControllerKind::QuadraticDroop:
      return -config.k_q.cwiseProduct(Q) - V.cwiseProduct(V - u_q);
    case ControllerKind::ReactiveCurrent:
      return -Q.cwiseQuotient(V) + u_q;
    case ControllerKind::EArp: {
      const Vec scaled = config.k_q.cwiseProduct(config.l_q * config.k_q.cwiseProduct(Q));
      return V.cwiseProduct(u_q - scaled);
    }
  }
  return {};
}

Vec frequency_field(const ControllerConfig& config, const Vec& omega, const Vec& P, const Vec& u_p) {
  return -(omega.array() - config.omega_star).matrix() - config.k_p.cwiseProduct(P - config.p_star) + u_p;
}

SecondaryField secondary_field(const ControllerConfig& config, const Vec& xi, const Vec& omega) {
  const Vec error = (config.omega_star - omega.array()).matrix();
  return {-config.l_p * xi + error.cwiseQuotient(config.k_p), xi};
}

Vec supply_weight_r2(const ControllerConfig& config, const Vec& V) {
  switch (config.kind) {
    case ControllerKind::ConventionalDroop:
    case ControllerKind::ReactiveCurrent:
      return Vec::Ones(V.size());
    case ControllerKind::QuadraticDroop:
    case ControllerKind::EArp:
      return V;
  }
  return {};
}

Mat dissipation_weight_x(const ControllerConfig& config, const Vec& V) {
  switch (config.kind) {
    case ControllerKind::ConventionalDroop:
    case ControllerKind::QuadraticDroop:
      return config.k_q.cwiseProduct(V).cwiseQuotient(config.t_q).asDiagonal();
    case ControllerKind::ReactiveCurrent:
      return config.t_q.cwiseInverse().asDiagonal();
    case ControllerKind::EArp: {
      const Vec w = V.cwiseProduct(config.k_q);
      return w.asDiagonal() * config.l_q * w.asDiagonal();
    }
  }
  return {};
}

DynamicUqField dynamic_uq_field(const NetworkTopology& topology, const ControllerConfig& config,
                                const GridState& state, const Equilibrium& eq) {
  if ((state.V.array() <= 0.0).any()) {
    throw DomainError("dynamic_uq_field: voltages must be strictly positive");
  }
  const Vec q = reactive_power(topology, state.theta, state.V);
  const Vec grad_v = bregman_gradient_v(topology, config, state.V, q, eq);
  return {-supply_weight_r2(config, state.V).cwiseProduct(grad_v),
          config.k_lambda.cwiseProduct(state.lambda)};
}

}  // namespace bregmangrid
