#include "bregmangrid/monitors.hpp"

#include <algorithm>
#include <cmath>

namespace bregmangrid {

namespace {

double total_storage(const TraceRecord& r) { return r.S + r.C + r.C_Q; }

}  // namespace

double spread(const Vec& values) {
  if (values.size() < 2) return 0.0;
  return values.maxCoeff() - values.minCoeff();
}

DissipationReport dissipation_monitor(const Trace& trace) {
  DissipationReport report;
  const int count = static_cast<int>(trace.records.size());
  if (count == 0) return report;
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) v[i] = total_storage(trace.records[i]);
  report.initial_value = v[0];
  report.slack = 1e-9 * std::abs(v[0]);

  double max_rate = 0.0;
  for (const auto& r : trace.records) max_rate = std::max(max_rate, std::abs(r.lyapunov_rate));
  report.rate_tolerance = std::max(1e-6 * max_rate, 1e-12);

  report.numeric_rate.resize(count, 0.0);
  for (int i = 0; i < count; ++i) {
    const TraceRecord& r = trace.records[i];
    report.numeric_rate[i] = r.numeric_rate;
    if (std::isfinite(r.numeric_rate)) {
      report.max_rate_mismatch = std::max(report.max_rate_mismatch, std::abs(r.numeric_rate - r.lyapunov_rate));
    }
    if (r.lyapunov_rate > report.slack) report.rate_nonpositive = false;
    if (i > 0) report.max_increase = std::max(report.max_increase, v[i] - v[i - 1]);
  }
  report.rates_match = report.max_rate_mismatch <= report.rate_tolerance;
  report.nonincreasing = report.max_increase <= report.slack;
  return report;
}

ConservationReport conservation_monitor(const Trace& trace, const ControllerConfig& config) {
  ConservationReport report;
  if (config.kind != ControllerKind::EArp || trace.records.empty()) return report;
  report.applicable = true;
  const double start = trace.records.front().conserved;
  for (const auto& r : trace.records) report.drift = std::max(report.drift, std::abs(r.conserved - start));
  return report;
}

SharingReport sharing_monitor(const Trace& trace, const ControllerConfig& config) {
  SharingReport report;
  if (trace.records.empty()) return report;
  const TraceRecord& last = trace.last();
  double worst = 0.0;
  for (const auto& r : trace.records) {
    if (r.t >= last.t - 1.0) worst = std::max(worst, r.rhs_norm);
  }
  report.steady = worst < 1e-8 && last.t >= 1.0;

  const Vec& k_p = config.k_p;
  const Vec& k_q = config.k_q;
  const Vec& V = last.state.V;
  const Vec& u = config.u_q_bar;
  report.active_deviation = spread(k_p.cwiseProduct(last.P));

  const bool u_positive = (u.array() > 0.0).all();
  switch (config.kind) {
    case ControllerKind::EArp:
      report.reactive_applicable = true;
      report.reactive_identity = "k_Q Q";
      report.reactive_deviation = spread(k_q.cwiseProduct(last.Q));
      break;
    case ControllerKind::ConventionalDroop:
      report.reactive_applicable = u_positive;
      report.reactive_identity = "(k_Q Q + V) / u_Q";
      if (u_positive) report.reactive_deviation = spread((k_q.cwiseProduct(last.Q) + V).cwiseQuotient(u));
      break;
    case ControllerKind::QuadraticDroop:
      report.reactive_applicable = u_positive;
      report.reactive_identity = "(k_Q Q / V + V) / u_Q";
      if (u_positive) {
        report.reactive_deviation = spread((k_q.cwiseProduct(last.Q).cwiseQuotient(V) + V).cwiseQuotient(u));
      }
      break;
    case ControllerKind::ReactiveCurrent:
      report.reactive_applicable = u_positive;
      report.reactive_identity = "(Q / V) / u_Q";
      if (u_positive) report.reactive_deviation = spread(last.Q.cwiseQuotient(V).cwiseQuotient(u));
      break;
  }

  report.lossy = !config.lossless();
  report.lossy_active_deviation = spread(k_p.cwiseProduct(last.P_ell));
  report.lossy_reactive_deviation = spread(k_q.cwiseProduct(last.Q_ell));
  return report;
}

}  // namespace bregmangrid
