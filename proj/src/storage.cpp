#include "bregmangrid/storage.hpp"

#include <cmath>

#include "bregmangrid/errors.hpp"
#include "bregmangrid/power_flow.hpp"

namespace bregmangrid {

namespace {

bool has_log(ControllerKind kind) {
  return kind == ControllerKind::ConventionalDroop || kind == ControllerKind::EArp;
}

void require_positive(const Vec& V, const char* what) {
  if ((V.array() <= 0.0).any() || !V.allFinite()) {
    throw DomainError(std::string(what) + ": voltages must be strictly positive");
  }
}

// Q_bar + K_Q^{-1} V_bar, which equals K_Q^{-1} u_Q at a droop equilibrium.
Vec droop_log_weight(const ControllerConfig& config, const Equilibrium& eq) {
  return eq.q_bar + eq.v_bar.cwiseQuotient(config.k_q);
}

// 1/2 V^T A(cos eta) V for the given line angles.
double potential(const NetworkTopology& topology, const Vec& eta, const Vec& V) {
  return 0.5 * V.dot(topology.loopy_laplacian(eta.array().cos().matrix()) * V);
}

// Bregman remainder of U + H, omitting the kinetic part. `phi` are the reduced
// coordinates of the state, eta its line angles.
double potential_bregman(const NetworkTopology& topology, const ControllerConfig& config,
                         const Vec& phi, const Vec& eta, const Vec& V, const Equilibrium& eq) {
  const Vec eta_bar = topology.edge_angles(eq.theta0);
  const Vec phi_bar = topology.to_phi(eq.theta0);
  const int n = topology.nodes();
  // P_bar^T (theta - theta0) written through reduced coordinates, since 1^T P_bar = 0.
  const double angle_term = eq.p_bar.head(n - 1).dot(phi - phi_bar);
  const double voltage_term = eq.q_bar.cwiseQuotient(eq.v_bar).dot(V - eq.v_bar);
  const double u_part =
      potential(topology, eta, V) - potential(topology, eta_bar, eq.v_bar) - angle_term - voltage_term;
  const double h_part = shaping_H(config, V, eq) - shaping_H(config, eq.v_bar, eq) -
                        shaping_H_gradient(config, eq.v_bar, eq).dot(V - eq.v_bar);
  return u_part + h_part;
}

}  // namespace

double energy_U(const NetworkTopology& topology, const ControllerConfig& config, const Vec& theta,
                const Vec& omega, const Vec& V) {
  const Vec inertia = config.t_p.cwiseQuotient(config.k_p);
  return 0.5 * omega.dot(inertia.cwiseProduct(omega)) + potential(topology, topology.edge_angles(theta), V);
}

double shaping_H(const ControllerConfig& config, const Vec& V, const Equilibrium& eq) {
  if (has_log(config.kind)) require_positive(V, "shaping_H");
  switch (config.kind) {
    case ControllerKind::ConventionalDroop: {
      if ((config.u_q_bar.array() <= 0.0).any()) {
        throw ConfigError("conventional droop shaping term requires u_Q_bar > 0");
      }
      return V.cwiseQuotient(config.k_q).sum() -
             droop_log_weight(config, eq).dot(V.array().log().matrix());
    }
    case ControllerKind::QuadraticDroop:
      return 0.5 * V.dot(V.cwiseQuotient(config.k_q));
    case ControllerKind::ReactiveCurrent:
      return 0.0;
    case ControllerKind::EArp:
      return -eq.q_bar.dot(V.array().log().matrix());
  }
  return 0.0;
}

Vec shaping_H_gradient(const ControllerConfig& config, const Vec& V, const Equilibrium& eq) {
  if (has_log(config.kind)) require_positive(V, "shaping_H");
  switch (config.kind) {
    case ControllerKind::ConventionalDroop:
      return config.k_q.cwiseInverse() - droop_log_weight(config, eq).cwiseQuotient(V);
    case ControllerKind::QuadraticDroop:
      return V.cwiseQuotient(config.k_q);
    case ControllerKind::ReactiveCurrent:
      return Vec::Zero(V.size());
    case ControllerKind::EArp:
      return -eq.q_bar.cwiseQuotient(V);
  }
  return {};
}

Vec shaping_H_curvature(const ControllerConfig& config, const Vec& V, const Equilibrium& eq) {
  if (has_log(config.kind)) require_positive(V, "shaping_H");
  const Vec v2 = V.cwiseProduct(V);
  switch (config.kind) {
    case ControllerKind::ConventionalDroop:
      return droop_log_weight(config, eq).cwiseQuotient(v2);
    case ControllerKind::QuadraticDroop:
      return config.k_q.cwiseInverse();
    case ControllerKind::ReactiveCurrent:
      return Vec::Zero(V.size());
    case ControllerKind::EArp:
      return eq.q_bar.cwiseQuotient(v2);
  }
  return {};
}

Vec bregman_gradient_v(const NetworkTopology&, const ControllerConfig& config, const Vec& V,
                       const Vec& Q, const Equilibrium& eq) {
  require_positive(V, "bregman_gradient_v");
  const Vec at_state = Q.cwiseQuotient(V) + shaping_H_gradient(config, V, eq);
  const Vec at_eq = eq.q_bar.cwiseQuotient(eq.v_bar) + shaping_H_gradient(config, eq.v_bar, eq);
  return at_state - at_eq;
}

StorageEvaluation bregman_S(const NetworkTopology& topology, const ControllerConfig& config,
                            const GridState& state, const Equilibrium& eq) {
  if (has_log(config.kind)) require_positive(state.V, "bregman_S");
  StorageEvaluation out;
  out.U = energy_U(topology, config, state.theta, state.omega, state.V);
  out.H = shaping_H(config, state.V, eq);
  out.S = out.U + out.H;

  const Vec inertia = config.t_p.cwiseQuotient(config.k_p);
  const Vec d_omega = (state.omega.array() - eq.omega0).matrix();
  const Vec eta = topology.edge_angles(state.theta);
  out.bregman = 0.5 * d_omega.dot(inertia.cwiseProduct(d_omega)) +
                potential_bregman(topology, config, topology.to_phi(state.theta), eta, state.V, eq);

  const PowerInjection pq = power_injection(topology, state.theta, state.V);
  out.grad_theta = pq.P - eq.p_bar;
  out.grad_omega = inertia.cwiseProduct(d_omega);
  out.grad_V = bregman_gradient_v(topology, config, state.V, pq.Q, eq);

  if (state.xi.size() == eq.xi_bar.size()) out.C = secondary_storage_C(state.xi, eq.xi_bar);
  if (state.lambda.size() == state.V.size()) {
    out.C_Q = dynamic_storage_CQ(config, state.lambda, lambda_bar(config, eq));
  }
  return out;
}

double bregman_phi(const NetworkTopology& topology, const ControllerConfig& config, const Vec& phi,
                   const Vec& omega, const Vec& V, const Equilibrium& eq) {
  const Vec inertia = config.t_p.cwiseQuotient(config.k_p);
  const Vec d_omega = (omega.array() - eq.omega0).matrix();
  return 0.5 * d_omega.dot(inertia.cwiseProduct(d_omega)) +
         potential_bregman(topology, config, phi, topology.edge_angles_phi(phi), V, eq);
}

ReducedGradient bregman_gradient_phi(const NetworkTopology& topology, const ControllerConfig& config,
                                     const Vec& phi, const Vec& V, const Equilibrium& eq) {
  const Vec theta = topology.from_phi(phi);
  const PowerInjection pq = power_injection(topology, theta, V);
  const int n = topology.nodes();
  return {(pq.P - eq.p_bar).head(n - 1), bregman_gradient_v(topology, config, V, pq.Q, eq)};
}

double secondary_storage_C(const Vec& xi, const Vec& xi_bar) {
  return 0.5 * (xi - xi_bar).squaredNorm();
}

double dynamic_storage_CQ(const ControllerConfig& config, const Vec& lambda, const Vec& lambda_bar) {
  const Vec d = lambda - lambda_bar;
  return 0.5 * d.dot(config.k_lambda.cwiseProduct(d));
}

Mat hessian(const NetworkTopology& topology, const ControllerConfig& config, const Vec& phi,
            const Vec& V, const Equilibrium& eq) {
  require_positive(V, "hessian");
  const int n = topology.nodes();
  const Vec eta = topology.edge_angles_phi(phi);
  const Vec gamma = topology.gamma(V);
  const Mat& d1 = topology.reduced_incidence();

  Mat h(2 * n - 1, 2 * n - 1);
  h.topLeftCorner(n - 1, n - 1) =
      d1 * gamma.cwiseProduct(eta.array().cos().matrix()).asDiagonal() * d1.transpose();
  const Mat cross = d1 * gamma.cwiseProduct(eta.array().sin().matrix()).asDiagonal() *
                    topology.absolute_incidence().transpose() * V.cwiseInverse().asDiagonal();
  h.topRightCorner(n - 1, n) = cross;
  h.bottomLeftCorner(n, n - 1) = cross.transpose();
  Mat vv = topology.loopy_laplacian(eta.array().cos().matrix());
  vv.diagonal() += shaping_H_curvature(config, V, eq);
  h.bottomRightCorner(n, n) = vv;
  return h;
}

Mat full_hessian(const NetworkTopology& topology, const ControllerConfig& config, const Vec& phi,
                 const Vec& V, const Equilibrium& eq) {
  const int n = topology.nodes();
  const Mat reduced = hessian(topology, config, phi, V, eq);
  Mat h = Mat::Zero(3 * n - 1, 3 * n - 1);
  h.topLeftCorner(n - 1, n - 1) = reduced.topLeftCorner(n - 1, n - 1);
  h.block(n - 1, n - 1, n, n) = config.t_p.cwiseQuotient(config.k_p).asDiagonal();
  h.topRightCorner(n - 1, n) = reduced.topRightCorner(n - 1, n);
  h.bottomLeftCorner(n, n - 1) = reduced.bottomLeftCorner(n, n - 1);
  h.bottomRightCorner(n, n) = reduced.bottomRightCorner(n, n);
  return h;
}

}  // namespace bregmangrid
