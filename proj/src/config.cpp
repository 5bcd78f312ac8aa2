#include "bregmangrid/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "bregmangrid/errors.hpp"

namespace bregmangrid {

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::ConventionalDroop: return "conventional_droop";
    case ControllerKind::QuadraticDroop: return "quadratic_droop";
    case ControllerKind::ReactiveCurrent: return "reactive_current";
    case ControllerKind::EArp: return "earp";
  }
  return "unknown";
}

std::optional<ControllerKind> parse_controller_kind(std::string_view text) {
  auto squash = [](std::string_view s) {
    std::string out;
    for (unsigned char c : s) {
      if (c != '_' && c != '-') out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
  };
  const std::string key = squash(text);
  for (auto kind : {ControllerKind::ConventionalDroop, ControllerKind::QuadraticDroop,
                    ControllerKind::ReactiveCurrent, ControllerKind::EArp}) {
    if (key == squash(to_string(kind))) return kind;
  }
  return std::nullopt;
}

ControllerConfig ControllerConfig::defaults(const NetworkTopology& topology, ControllerKind kind) {
  const int n = topology.nodes();
  ControllerConfig cfg;
  cfg.kind = kind;
  cfg.t_p = Vec::Ones(n);
  cfg.t_q = Vec::Ones(n);
  cfg.k_p = Vec::Ones(n);
  cfg.k_q = Vec::Ones(n);
  cfg.p_star = Vec::Zero(n);
  cfg.u_q_bar = kind == ControllerKind::EArp ? Vec::Zero(n) : Vec::Ones(n);
  cfg.l_p = topology.unit_laplacian();
  cfg.l_q = topology.unit_laplacian();
  cfg.k_lambda = cfg.k_q;
  return cfg;
}

namespace {

void check_positive(const Vec& v, int n, const char* name) {
  if (v.size() != n) {
    throw ConfigError(std::string(name) + " must have one entry per node");
  }
  if (!v.allFinite() || (v.array() <= 0.0).any()) {
    throw ConfigError(std::string(name) + " entries must be > 0");
  }
}

void check_laplacian(const Mat& l, int n, const char* name) {
  if (l.rows() != n || l.cols() != n) {
    throw ConfigError(std::string(name) + " must be n x n");
  }
  const double scale = std::max(1.0, l.cwiseAbs().maxCoeff());
  if ((l - l.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ConfigError(std::string(name) + " must be symmetric");
  }
  if (l.rowwise().sum().cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ConfigError(std::string(name) + " rows must sum to zero");
  }
  if (n == 1) return;
  Eigen::SelfAdjointEigenSolver<Mat> eig(l, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues()(0) < -1e-10 * scale) {
    throw ConfigError(std::string(name) + " must be positive semidefinite");
  }
  if (eig.eigenvalues()(1) <= 1e-10 * scale) {
    throw ConfigError(std::string(name) + " communication graph must be connected");
  }
}

}  // namespace

void ControllerConfig::validate(int nodes) const {
  const int n = nodes;
  check_positive(t_p, n, "T_P");
  check_positive(t_q, n, "T_Q");
  check_positive(k_p, n, "K_P");
  check_positive(k_q, n, "K_Q");
  check_positive(k_lambda, n, "K_lambda");
  if (p_star.size() != n || !p_star.allFinite()) {
    throw ConfigError("P_star must have one finite entry per node");
  }
  if (u_q_bar.size() != n || !u_q_bar.allFinite()) {
    throw ConfigError("u_Q_bar must have one finite entry per node");
  }
  if (!std::isfinite(omega_star)) throw ConfigError("omega_star must be finite");
  if (!(phi_loss >= 0.0 && phi_loss <= kHalfPi)) {
    throw ConfigError("phi_loss must lie in [0, pi/2]");
  }
  if (voltage_disturbance.size() != 0 && voltage_disturbance.size() != n) {
    throw ConfigError("voltage_disturbance must be empty or have one entry per node");
  }
  check_laplacian(l_p, n, "L_P");
  check_laplacian(l_q, n, "L_Q");

  switch (kind) {
    case ControllerKind::ConventionalDroop:
      if ((u_q_bar.array() <= 0.0).any()) {
        throw ConfigError("conventional droop requires u_Q_bar > 0 (K_Q^{-1} u_Q in the positive orthant)");
      }
      break;
    case ControllerKind::EArp: {
      if ((t_q.array() != 1.0).any()) {
        throw ConfigError("EArp requires T_Q = I");
      }
      const double mass = k_q.cwiseInverse().dot(u_q_bar);
      if (std::abs(mass) > 1e-12 * std::max(1.0, u_q_bar.cwiseAbs().maxCoeff())) {
        throw ConfigError("EArp requires 1^T K_Q^{-1} u_Q_bar = 0 for an equilibrium to exist");
      }
      break;
    }
    default:
      break;
  }
}

}  // namespace bregmangrid
