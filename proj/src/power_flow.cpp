#include "bregmangrid/power_flow.hpp"

#include <cmath>

#include "bregmangrid/errors.hpp"

namespace bregmangrid {

namespace {

void require_positive(const Vec& voltage, const char* what) {
  if ((voltage.array() <= 0.0).any() || !voltage.allFinite()) {
    throw DomainError(std::string(what) + ": voltages must be strictly positive");
  }
}

}  // namespace

Vec active_power(const NetworkTopology& topology, const Vec& theta, const Vec& voltage) {
  require_positive(voltage, "active_power");
  const Vec flows = topology.gamma(voltage).cwiseProduct(
      topology.edge_angles(theta).array().sin().matrix());
  return topology.incidence() * flows;
}

Vec active_power_elementwise(const NetworkTopology& topology, const Vec& theta, const Vec& voltage) {
  require_positive(voltage, "active_power");
  const int n = topology.nodes();
  Vec p = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int k : topology.incident_edges(i)) {
      const int j = topology.other_end(k, i);
      p(i) += topology.edge_susceptance()(k) * voltage(i) * voltage(j) * std::sin(theta(i) - theta(j));
    }
  }
  return p;
}

Vec reactive_power(const NetworkTopology& topology, const Vec& theta, const Vec& voltage) {
  require_positive(voltage, "reactive_power");
  const Mat a = topology.loopy_laplacian(topology.edge_angles(theta).array().cos().matrix());
  return voltage.cwiseProduct(a * voltage);
}

Vec reactive_power_incidence_form(const NetworkTopology& topology, const Vec& theta,
                                  const Vec& voltage) {
  require_positive(voltage, "reactive_power");
  const Vec flows = topology.gamma(voltage).cwiseProduct(
      topology.edge_angles(theta).array().cos().matrix());
  return voltage.cwiseProduct(topology.diag_term().cwiseProduct(voltage)) -
         topology.absolute_incidence() * flows;
}

Vec reactive_power_elementwise(const NetworkTopology& topology, const Vec& theta,
                               const Vec& voltage) {
  require_positive(voltage, "reactive_power");
  const int n = topology.nodes();
  Vec q(n);
  for (int i = 0; i < n; ++i) {
    q(i) = topology.diag_term()(i) * voltage(i) * voltage(i);
    for (int k : topology.incident_edges(i)) {
      const int j = topology.other_end(k, i);
      q(i) -= topology.edge_susceptance()(k) * voltage(i) * voltage(j) * std::cos(theta(i) - theta(j));
    }
  }
  return q;
}

PowerInjection power_injection(const NetworkTopology& topology, const Vec& theta,
                               const Vec& voltage) {
  return {active_power(topology, theta, voltage), reactive_power(topology, theta, voltage)};
}

LossRotation loss_rotation(double phi_loss) {
  if (!(phi_loss >= 0.0 && phi_loss <= kHalfPi)) {
    throw DomainError("homogeneity angle must lie in [0, pi/2]");
  }
  if (phi_loss == kHalfPi) return {1.0, 0.0};
  if (phi_loss == 0.0) return {0.0, 1.0};
  return {std::sin(phi_loss), std::cos(phi_loss)};
}

PowerInjection lossy_transform(const Vec& P, const Vec& Q, double phi_loss) {
  const auto [s, c] = loss_rotation(phi_loss);
  return {s * P + c * Q, s * Q - c * P};
}

PowerInjection inverse_lossy_transform(const Vec& P_ell, const Vec& Q_ell, double phi_loss) {
  const auto [s, c] = loss_rotation(phi_loss);
  return {s * P_ell - c * Q_ell, c * P_ell + s * Q_ell};
}

Vec optimal_feedforward(const Vec& k_p, const Vec& p_star) {
  const double level = -p_star.sum() / k_p.cwiseInverse().sum();
  return Vec::Constant(p_star.size(), level);
}

Vec balanced_injection(const Vec& k_p, const Vec& p_star) {
  return p_star + k_p.cwiseInverse().cwiseProduct(optimal_feedforward(k_p, p_star));
}

double tree_feasibility_margin(const NetworkTopology& topology, const Vec& v_bar, const Vec& k_p,
                               const Vec& p_star) {
  if (!topology.is_tree()) {
    throw DomainError("tree_feasibility_margin requires a tree (m = n - 1)");
  }
  if (topology.edges() == 0) return 0.0;
  const Vec target = balanced_injection(k_p, p_star);
  // D has full column rank on a tree; D^+ = (D^T D)^{-1} D^T is its left inverse.
  const Mat& d = topology.incidence();
  const Vec flows = (d.transpose() * d).ldlt().solve(d.transpose() * target);
  return flows.cwiseQuotient(topology.gamma(v_bar)).lpNorm<Eigen::Infinity>();
}

}  // namespace bregmangrid
