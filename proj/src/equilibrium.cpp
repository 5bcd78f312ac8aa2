#include "bregmangrid/equilibrium.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "bregmangrid/controllers.hpp"
#include "bregmangrid/errors.hpp"
#include "bregmangrid/power_flow.hpp"

namespace bregmangrid {

Equilibrium make_equilibrium(const NetworkTopology& topology, const ControllerConfig& config,
                             const Vec& theta0, const Vec& v_bar) {
  Equilibrium eq;
  eq.theta0 = theta0;
  eq.omega0 = config.omega_star;
  eq.v_bar = v_bar;
  eq.u_p_bar = optimal_feedforward(config.k_p, config.p_star);
  eq.u_q_bar = config.u_q_bar;
  eq.p_bar = active_power(topology, theta0, v_bar);
  eq.q_bar = reactive_power(topology, theta0, v_bar);
  eq.xi_bar = eq.u_p_bar;

  const int n = topology.nodes();
  eq.frequency_residual =
      frequency_field(config, Vec::Constant(n, eq.omega0), eq.p_bar, eq.u_p_bar).lpNorm<Eigen::Infinity>();
  eq.voltage_residual = voltage_field(config, v_bar, eq.q_bar, eq.u_q_bar).lpNorm<Eigen::Infinity>();
  const Vec eta = topology.edge_angles(theta0);
  eq.in_security_region = eta.size() == 0 || eta.cwiseAbs().maxCoeff() < kHalfPi;
  return eq;
}

ControllerConfig setpoints_for(const NetworkTopology& topology, const ControllerConfig& config,
                               const Vec& theta0, const Vec& v_bar) {
  ControllerConfig out = config;
  const PowerInjection pq = power_injection(topology, theta0, v_bar);
  out.p_star = pq.P;
  const Vec& k_q = config.k_q;
  switch (config.kind) {
    case ControllerKind::ConventionalDroop:
      out.u_q_bar = v_bar + k_q.cwiseProduct(pq.Q);
      break;
    case ControllerKind::QuadraticDroop:
      out.u_q_bar = (k_q.cwiseProduct(pq.Q) + v_bar.cwiseProduct(v_bar)).cwiseQuotient(v_bar);
      break;
    case ControllerKind::ReactiveCurrent:
      out.u_q_bar = pq.Q.cwiseQuotient(v_bar);
      break;
    case ControllerKind::EArp:
      out.u_q_bar = k_q.cwiseProduct(config.l_q * k_q.cwiseProduct(pq.Q));
      out.earp_log_level = v_bar.array().log().matrix().cwiseQuotient(k_q).sum();
      break;
  }
  return out;
}

Vec lambda_bar(const ControllerConfig& config, const Equilibrium& eq) {
  Vec steady_u = eq.u_q_bar;
  if (config.has_disturbance()) {
    steady_u -= config.voltage_disturbance.cwiseQuotient(supply_weight_r2(config, eq.v_bar));
  }
  return steady_u.cwiseQuotient(config.k_lambda);
}

namespace {

// Residual and Jacobian of the feasibility equations in x = (phi, V).
class FeasibilitySystem {
 public:
  FeasibilitySystem(const NetworkTopology& topology, const ControllerConfig& config)
      : topology_(topology), config_(config), n_(topology.nodes()),
        target_(balanced_injection(config.k_p, config.p_star)) {}

  int size() const { return 2 * n_ - 1; }

  Vec residual(const Vec& x) const {
    const Vec phi = x.head(n_ - 1);
    const Vec V = x.tail(n_);
    const Vec theta = topology_.from_phi(phi);
    const PowerInjection pq = power_injection(topology_, theta, V);
    Vec r(size());
    r.head(n_ - 1) = (pq.P - target_).head(n_ - 1);
    r.tail(n_) = voltage_equation(V, pq.Q);
    return r;
  }

  Mat jacobian(const Vec& x) const {
    const Vec phi = x.head(n_ - 1);
    const Vec V = x.tail(n_);
    const Vec eta = topology_.edge_angles_phi(phi);
    const Vec gamma = topology_.gamma(V);
    const Vec s = eta.array().sin();
    const Vec c = eta.array().cos();
    const Mat& d = topology_.incidence();
    const Mat& d1 = topology_.reduced_incidence();
    const Mat abs_d = topology_.absolute_incidence();
    const Mat a = topology_.loopy_laplacian(c);
    const Vec q = V.cwiseProduct(a * V);

    const Mat dp_dphi = d * gamma.cwiseProduct(c).asDiagonal() * d1.transpose();
    const Mat dp_dv = d * gamma.cwiseProduct(s).asDiagonal() * abs_d.transpose() * V.cwiseInverse().asDiagonal();
    const Mat dq_dphi = abs_d * gamma.cwiseProduct(s).asDiagonal() * d1.transpose();
    Mat dq_dv = V.asDiagonal() * a;
    dq_dv.diagonal() += a * V;

    Mat j = Mat::Zero(size(), size());
    j.topLeftCorner(n_ - 1, n_ - 1) = dp_dphi.topRows(n_ - 1);
    j.topRightCorner(n_ - 1, n_) = dp_dv.topRows(n_ - 1);

    Mat df_dphi;
    Mat df_dv;
    const auto& k_q = config_.k_q;
    switch (config_.kind) {
      case ControllerKind::ConventionalDroop:
        df_dphi = -(k_q.asDiagonal() * dq_dphi);
        df_dv = -(k_q.asDiagonal() * dq_dv);
        df_dv.diagonal().array() -= 1.0;
        break;
      case ControllerKind::QuadraticDroop:
        df_dphi = -(k_q.asDiagonal() * dq_dphi);
        df_dv = -(k_q.asDiagonal() * dq_dv);
        df_dv.diagonal() -= 2.0 * V - config_.u_q_bar;
        break;
      case ControllerKind::ReactiveCurrent:
        df_dphi = -(V.cwiseInverse().asDiagonal() * dq_dphi);
        df_dv = -(V.cwiseInverse().asDiagonal() * dq_dv);
        df_dv.diagonal() += q.cwiseQuotient(V.cwiseProduct(V));
        break;
      case ControllerKind::EArp: {
        const Mat weight = k_q.asDiagonal() * config_.l_q * k_q.asDiagonal();
        df_dphi = -weight * dq_dphi;
        df_dv = -weight * dq_dv;
        df_dphi.row(n_ - 1).setZero();
        df_dv.row(n_ - 1) = V.cwiseProduct(k_q).cwiseInverse().transpose();
        break;
      }
    }
    j.bottomLeftCorner(n_, n_ - 1) = df_dphi;
    j.bottomRightCorner(n_, n_) = df_dv;
    return j;
  }

 private:
  Vec voltage_equation(const Vec& V, const Vec& Q) const {
    if (config_.kind != ControllerKind::EArp) {
      return voltage_field(config_, V, Q, config_.u_q_bar);
    }
    // f/[V]; its K_Q^{-1}-weighted sum is identically zero, so the last row
    // is replaced by the conserved-quantity anchor.
    const Vec& k_q = config_.k_q;
    Vec g = config_.u_q_bar - k_q.cwiseProduct(config_.l_q * k_q.cwiseProduct(Q));
    g(n_ - 1) = V.array().log().matrix().cwiseQuotient(k_q).sum() - config_.earp_log_level;
    return g;
  }

  const NetworkTopology& topology_;
  const ControllerConfig& config_;
  int n_;
  Vec target_;
};

struct NewtonOutcome {
  bool converged = false;
  Vec x;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

NewtonOutcome newton(const FeasibilitySystem& system, Vec x, const NewtonOptions& options) {
  NewtonOutcome out;
  const int n_phi = (system.size() - 1) / 2;
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    Vec r;
    try {
      r = system.residual(x);
    } catch (const DomainError&) {
      break;
    }
    if (!r.allFinite()) break;
    const double norm = r.size() ? r.lpNorm<Eigen::Infinity>() : 0.0;
    out.x = x;
    out.residual = norm;
    out.iterations = iter;
    if (norm < options.tolerance) {
      out.converged = true;
      break;
    }
    if (iter == options.max_iterations) break;

    const Vec step = system.jacobian(x).colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) break;
    double alpha = 1.0;
    Vec trial = x + step;
    while ((trial.tail(n_phi + 1).array() <= 0.0).any() && alpha > 1e-12) {
      alpha *= 0.5;
      trial = x + alpha * step;
    }
    if ((trial.tail(n_phi + 1).array() <= 0.0).any()) break;
    x = trial;
  }
  if (out.converged) {
    // One polishing step, kept only if it lowers the residual.
    try {
      const Vec step = system.jacobian(out.x).colPivHouseholderQr().solve(-system.residual(out.x));
      const Vec trial = out.x + step;
      if ((trial.tail(n_phi + 1).array() > 0.0).all()) {
        const Vec r = system.residual(trial);
        if (r.allFinite() && r.lpNorm<Eigen::Infinity>() < out.residual) {
          out.x = trial;
          out.residual = r.lpNorm<Eigen::Infinity>();
        }
      }
    } catch (const DomainError&) {
    }
  }
  return out;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Vec start_point(int n, int index, std::mt19937_64& rng) {
  Vec x(2 * n - 1);
  if (index == 0) {
    x.head(n - 1).setZero();
    x.tail(n).setOnes();
    return x;
  }
  for (int i = 0; i < n - 1; ++i) x(i) = -0.3 + 0.6 * uniform01(rng);
  for (int i = 0; i < n; ++i) x(n - 1 + i) = 0.8 + 0.4 * uniform01(rng);
  return x;
}

Equilibrium to_equilibrium(const NetworkTopology& topology, const ControllerConfig& config,
                           const NewtonOutcome& outcome, int start) {
  const int n = topology.nodes();
  Equilibrium eq = make_equilibrium(topology, config, topology.from_phi(outcome.x.head(n - 1)),
                                    outcome.x.tail(n));
  eq.iterations = outcome.iterations;
  eq.start = start;
  return eq;
}

bool same_equilibrium(const Equilibrium& a, const Equilibrium& b) {
  const double two_pi = 2.0 * std::numbers::pi;
  for (Eigen::Index i = 0; i < a.theta0.size(); ++i) {
    const double d = std::remainder(a.theta0(i) - b.theta0(i), two_pi);
    if (std::abs(d) > 1e-6) return false;
  }
  return (a.v_bar - b.v_bar).lpNorm<Eigen::Infinity>() <= 1e-6;
}

}  // namespace

Equilibrium solve_equilibrium(const NetworkTopology& topology, const ControllerConfig& config,
                              const NewtonOptions& options) {
  config.validate(topology.nodes());
  const FeasibilitySystem system(topology, config);
  std::mt19937_64 rng(options.seed);
  double best = std::numeric_limits<double>::infinity();
  for (int start = 0; start <= options.restarts; ++start) {
    const NewtonOutcome outcome = newton(system, start_point(topology.nodes(), start, rng), options);
    if (outcome.converged) return to_equilibrium(topology, config, outcome, start);
    best = std::min(best, outcome.residual);
  }
  throw SolverError("equilibrium solver did not converge from " + std::to_string(options.restarts + 1) +
                        " starts; smallest residual " + std::to_string(best),
                    best);
}

std::vector<Equilibrium> find_equilibria(const NetworkTopology& topology,
                                         const ControllerConfig& config,
                                         const NewtonOptions& options) {
  config.validate(topology.nodes());
  const FeasibilitySystem system(topology, config);
  std::mt19937_64 rng(options.seed);
  std::vector<Equilibrium> found;
  for (int start = 0; start <= options.restarts; ++start) {
    const NewtonOutcome outcome = newton(system, start_point(topology.nodes(), start, rng), options);
    if (!outcome.converged) continue;
    Equilibrium eq = to_equilibrium(topology, config, outcome, start);
    bool duplicate = false;
    for (const auto& other : found) duplicate = duplicate || same_equilibrium(eq, other);
    if (!duplicate) found.push_back(std::move(eq));
  }
  return found;
}

}  // namespace bregmangrid
