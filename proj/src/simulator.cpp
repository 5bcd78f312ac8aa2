#include "bregmangrid/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "bregmangrid/controllers.hpp"
#include "bregmangrid/errors.hpp"
#include "bregmangrid/power_flow.hpp"
#include "bregmangrid/storage.hpp"

namespace bregmangrid {

namespace {

struct Measured {
  PowerInjection actual;    // lossless expressions
  PowerInjection measured;  // what the inverters see on lossy lines
  PowerInjection used;      // what enters the controller fields
};

Measured measure(const NetworkTopology& topology, const ControllerConfig& config,
                 const GridState& state, const RhsOptions& options) {
  Measured m;
  m.actual = power_injection(topology, state.theta, state.V);
  if (options.bypass_loss_transform) {
    m.measured = m.actual;
    m.used = m.actual;
    return m;
  }
  m.measured = lossy_transform(m.actual.P, m.actual.Q, config.phi_loss);
  m.used = inverse_lossy_transform(m.measured.P, m.measured.Q, config.phi_loss);
  return m;
}

Vec input_u_p(const ControllerConfig& config, const Equilibrium& eq, const GridState& state) {
  return config.use_secondary ? state.xi : eq.u_p_bar;
}

Vec input_u_q(const ControllerConfig& config, const Equilibrium& eq, const GridState& state) {
  return config.use_dynamic_uq ? Vec(config.k_lambda.cwiseProduct(state.lambda)) : eq.u_q_bar;
}

double max_abs(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace

GridState equilibrium_state(const ControllerConfig& config, const Equilibrium& eq) {
  const auto n = eq.v_bar.size();
  GridState s;
  s.theta = eq.theta0;
  s.omega = Vec::Constant(n, eq.omega0);
  s.V = eq.v_bar;
  s.xi = config.use_secondary ? eq.xi_bar : Vec(Vec::Zero(n));
  s.lambda = config.use_dynamic_uq ? lambda_bar(config, eq) : Vec(Vec::Zero(n));
  return s;
}

GridState rhs(const NetworkTopology& topology, const ControllerConfig& config,
              const Equilibrium& eq, const GridState& state, const RhsOptions& options) {
  if ((state.V.array() <= 0.0).any()) throw DomainError("rhs: voltages must be strictly positive");
  const int n = topology.nodes();
  const Measured m = measure(topology, config, state, options);

  GridState d;
  d.theta = state.omega;
  d.omega = frequency_field(config, state.omega, m.used.P, input_u_p(config, eq, state))
                .cwiseQuotient(config.t_p);
  Vec v_field = voltage_field(config, state.V, m.used.Q, input_u_q(config, eq, state));
  if (config.has_disturbance()) v_field += config.voltage_disturbance;
  d.V = v_field.cwiseQuotient(config.t_q);

  d.xi = config.use_secondary ? secondary_field(config, state.xi, state.omega).xi_dot : Vec(Vec::Zero(n));
  if (config.use_dynamic_uq) {
    const Vec grad_v = bregman_gradient_v(topology, config, state.V, m.used.Q, eq);
    d.lambda = -supply_weight_r2(config, state.V).cwiseProduct(grad_v).cwiseQuotient(config.t_q);
  } else {
    d.lambda = Vec::Zero(n);
  }
  return d;
}

double lyapunov_rate(const NetworkTopology& topology, const ControllerConfig& config,
                     const Equilibrium& eq, const GridState& state) {
  const Vec q = reactive_power(topology, state.theta, state.V);
  const Vec g = bregman_gradient_v(topology, config, state.V, q, eq);
  const Vec w = (state.omega.array() - eq.omega0).matrix();
  const Vec w_scaled = w.cwiseQuotient(config.k_p);
  const Vec du_p = input_u_p(config, eq, state) - eq.u_p_bar;
  const Vec du_q = input_u_q(config, eq, state) - eq.u_q_bar;

  Vec v_supply = supply_weight_r2(config, state.V).cwiseProduct(du_q);
  if (config.has_disturbance()) v_supply += config.voltage_disturbance;

  double rate = -w.dot(w_scaled) + w_scaled.dot(du_p) - g.dot(dissipation_weight_x(config, state.V) * g) +
                g.dot(v_supply.cwiseQuotient(config.t_q));
  if (config.use_secondary) {
    const Vec xi_err = state.xi - eq.xi_bar;
    rate += -xi_err.dot(config.l_p * xi_err) - xi_err.dot(w_scaled);
  }
  if (config.use_dynamic_uq) {
    const Vec lam_err = state.lambda - lambda_bar(config, eq);
    const Vec weight = config.k_lambda.cwiseProduct(supply_weight_r2(config, state.V)).cwiseQuotient(config.t_q);
    rate -= lam_err.dot(weight.cwiseProduct(g));
  }
  return rate;
}

std::string_view to_string(TraceStatus status) {
  switch (status) {
    case TraceStatus::Completed:
      return "completed";
    case TraceStatus::VoltageFloor:
      return "voltage_floor";
    case TraceStatus::NonFinite:
      return "non_finite";
  }
  return "completed";
}

namespace {

using Field = std::function<Vec(const Vec&)>;

Vec rk4_step(const Field& f, const Vec& x, double h) {
  const Vec k1 = f(x);
  const Vec k2 = f(x + 0.5 * h * k1);
  const Vec k3 = f(x + 0.5 * h * k2);
  const Vec k4 = f(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double total_storage(const NetworkTopology& topology, const ControllerConfig& config,
                     const Equilibrium& eq, const GridState& state) {
  double total = bregman_S(topology, config, state, eq).bregman;
  if (config.use_secondary) total += secondary_storage_C(state.xi, eq.xi_bar);
  if (config.use_dynamic_uq) total += dynamic_storage_CQ(config, state.lambda, lambda_bar(config, eq));
  return total;
}

// Fourth-order central difference of S + C + C_Q along the flow through x,
// using RK4 sub-steps of size h in both time directions.
double flow_rate(const NetworkTopology& topology, const ControllerConfig& config, const Equilibrium& eq,
                 const Field& f, const Vec& x, double h) {
  try {
    const Vec p1 = rk4_step(f, x, h);
    const Vec p2 = rk4_step(f, p1, h);
    const Vec m1 = rk4_step(f, x, -h);
    const Vec m2 = rk4_step(f, m1, -h);
    auto s = [&](const Vec& y) { return total_storage(topology, config, eq, GridState::unpack(y)); };
    return (s(m2) - 8.0 * s(m1) + 8.0 * s(p1) - s(p2)) / (12.0 * h);
  } catch (const DomainError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

TraceRecord make_record(const NetworkTopology& topology, const ControllerConfig& config,
                        const Equilibrium& eq, const GridState& state, double t,
                        const RhsOptions& options, const Field& f, double h) {
  TraceRecord r;
  r.t = t;
  r.state = state;
  const Measured m = measure(topology, config, state, options);
  r.P = m.actual.P;
  r.Q = m.actual.Q;
  r.P_ell = m.measured.P;
  r.Q_ell = m.measured.Q;

  const StorageEvaluation s = bregman_S(topology, config, state, eq);
  r.S = s.bregman;
  if (config.use_secondary) r.C = secondary_storage_C(state.xi, eq.xi_bar);
  if (config.use_dynamic_uq) r.C_Q = dynamic_storage_CQ(config, state.lambda, lambda_bar(config, eq));
  r.lyapunov_rate = lyapunov_rate(topology, config, eq, state);
  r.numeric_rate = flow_rate(topology, config, eq, f, state.pack(), h);
  r.conserved = state.V.array().log().matrix().cwiseQuotient(config.k_q).sum();

  const GridState d = rhs(topology, config, eq, state, options);
  r.rhs_norm = std::max({max_abs(d.omega), max_abs(d.V), max_abs(d.xi), max_abs(d.lambda)});
  return r;
}

}  // namespace

Trace integrate(const NetworkTopology& topology, const ControllerConfig& config,
                const Equilibrium& eq, const GridState& initial, const IntegratorOptions& options) {
  if (!(options.dt > 0.0)) throw ConfigError("integrate: dt must be positive");
  if (options.sample_every < 1) throw ConfigError("integrate: sample_every must be >= 1");
  if ((initial.V.array() <= 0.0).any()) throw DomainError("integrate: initial voltages must be positive");

  Trace trace;
  trace.dt = options.dt;
  trace.sample_every = options.sample_every;
  const long steps = std::lround(options.t_end / options.dt);
  const double dt = options.dt;
  const Field f = [&](const Vec& x) {
    return rhs(topology, config, eq, GridState::unpack(x), options.rhs).pack();
  };
  const double h = std::min(dt, 1e-3);

  Vec x = initial.pack();
  trace.records.push_back(make_record(topology, config, eq, initial, 0.0, options.rhs, f, h));
  const auto n = initial.theta.size();

  for (long step = 1; step <= steps; ++step) {
    Vec next;
    try {
      next = rk4_step(f, x, dt);
    } catch (const DomainError&) {
      trace.status = TraceStatus::VoltageFloor;
      trace.message = "voltage left the positive orthant during step at t=" + std::to_string(step * dt);
      return trace;
    }
    const double t = static_cast<double>(step) * dt;
    if (!next.allFinite()) {
      trace.status = TraceStatus::NonFinite;
      trace.message = "state became non-finite at t=" + std::to_string(t);
      return trace;
    }
    if ((next.segment(2 * n, n).array() <= options.v_min).any()) {
      trace.status = TraceStatus::VoltageFloor;
      trace.message = "voltage reached the floor at t=" + std::to_string(t);
      return trace;
    }
    x = next;
    if (step % options.sample_every == 0 || step == steps) {
      trace.records.push_back(make_record(topology, config, eq, GridState::unpack(x), t, options.rhs, f, h));
    }
  }
  return trace;
}

}  // namespace bregmangrid
