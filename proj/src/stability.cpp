#include "bregmangrid/stability.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "bregmangrid/controllers.hpp"
#include "bregmangrid/power_flow.hpp"
#include "bregmangrid/storage.hpp"

namespace bregmangrid {

namespace {

constexpr double kSlack = 1e-10;

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(int a, int b) { parent_[find(a)] = find(b); }

 private:
  std::vector<int> parent_;
};

// Component label per node after removing the given lines.
std::vector<int> components_without(const NetworkTopology& topology, const std::vector<int>& removed) {
  UnionFind uf(topology.nodes());
  const auto edges = topology.edge_list();
  for (int k = 0; k < topology.edges(); ++k) {
    if (std::find(removed.begin(), removed.end(), k) == removed.end()) {
      uf.unite(edges[k].from, edges[k].to);
    }
  }
  std::vector<int> label(topology.nodes());
  for (int i = 0; i < topology.nodes(); ++i) label[i] = uf.find(i);
  return label;
}

bool is_minimal_cut(const NetworkTopology& topology, const std::vector<int>& cut) {
  const std::vector<int> label = components_without(topology, cut);
  std::set<int> distinct(label.begin(), label.end());
  if (distinct.size() != 2) return false;
  const auto edges = topology.edge_list();
  for (int k : cut) {
    if (label[edges[k].from] == label[edges[k].to]) return false;
  }
  return true;
}

bool pairwise_disjoint(const NetworkTopology& topology, const std::vector<int>& cut) {
  std::set<int> used;
  for (int k : cut) {
    const Edge& e = topology.edge_list()[k];
    if (!used.insert(e.from).second || !used.insert(e.to).second) return false;
  }
  return true;
}

void enumerate_matchings(const NetworkTopology& topology, std::size_t size, int next,
                         std::vector<int>& chosen, std::vector<char>& used,
                         std::vector<std::vector<int>>& out) {
  if (chosen.size() == size) {
    if (is_minimal_cut(topology, chosen)) out.push_back(chosen);
    return;
  }
  const auto edges = topology.edge_list();
  for (int k = next; k < topology.edges(); ++k) {
    const Edge& e = edges[k];
    if (used[e.from] || used[e.to]) continue;
    used[e.from] = used[e.to] = 1;
    chosen.push_back(k);
    enumerate_matchings(topology, size, k + 1, chosen, used, out);
    chosen.pop_back();
    used[e.from] = used[e.to] = 0;
  }
}

bool shorter_then_lexicographic(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

std::vector<std::vector<int>> sample_cuts(const NetworkTopology& topology, std::uint64_t seed,
                                          int samples) {
  const int n = topology.nodes();
  std::mt19937_64 rng(seed);
  std::set<std::vector<int>> found;
  const auto edges = topology.edge_list();
  for (int s = 0; s < samples; ++s) {
    std::vector<char> inside(n, 0);
    const int target = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
    int count = 1;
    inside[rng() % static_cast<std::uint64_t>(n)] = 1;
    while (count < target) {
      std::vector<int> frontier;
      for (int k = 0; k < topology.edges(); ++k) {
        if (inside[edges[k].from] != inside[edges[k].to]) {
          frontier.push_back(inside[edges[k].from] ? edges[k].to : edges[k].from);
        }
      }
      inside[frontier[rng() % frontier.size()]] = 1;
      ++count;
    }
    std::vector<int> cut;
    for (int k = 0; k < topology.edges(); ++k) {
      if (inside[edges[k].from] != inside[edges[k].to]) cut.push_back(k);
    }
    if (pairwise_disjoint(topology, cut) && is_minimal_cut(topology, cut)) found.insert(cut);
  }
  return {found.begin(), found.end()};
}

double min_symmetric_eigenvalue(const Mat& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

CutsetWitness make_witness(const NetworkTopology& topology, const ControllerConfig& config,
                           const Equilibrium& eq, const std::vector<int>& edges, const Vec& eta,
                           const Vec& beta, bool security_violation) {
  CutsetWitness w;
  w.edges = edges;
  w.security_violation = security_violation;
  for (int k : edges) {
    w.values.push_back({k, std::pow(std::sin(eta(k)), 2), beta(k) * std::cos(eta(k))});
  }
  const Mat m = center_matrix(topology, config, eq);
  w.center_min_eigenvalue = min_symmetric_eigenvalue(m);

  if (!security_violation) {
    const int n = topology.nodes();
    const int lines = topology.edges();
    Vec side = Vec::Zero(n);
    for (int i : cut_side(topology, edges)) side(i) = 1.0;
    Vec v = Vec::Zero(lines + n);
    v.head(lines) = topology.incidence().transpose() * side;
    for (int k : edges) {
      const Edge& e = topology.edge_list()[k];
      const double scale = v(k) * (-std::sin(eta(k)) / beta(k));
      v(lines + e.from) = eq.v_bar(e.from) * scale;
      v(lines + e.to) = eq.v_bar(e.to) * scale;
    }
    w.test_vector_value = v.dot(m * v);
  }
  return w;
}

}  // namespace

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::ConvexCertified:
      return "ConvexCertified";
    case Verdict::UnstableCertified:
      return "UnstableCertified";
    case Verdict::Inconclusive:
      return "Inconclusive";
  }
  return "Inconclusive";
}

GershgorinReport gershgorin_convexity_check(const NetworkTopology& topology,
                                            const ControllerConfig& config, const Equilibrium& eq) {
  GershgorinReport report;
  const Vec eta = eq.edge_angles(topology);
  for (int k = 0; k < topology.edges(); ++k) {
    if (std::abs(eta(k)) >= kHalfPi) {
      report.precondition_ok = false;
      report.reason = "line " + std::to_string(k) + " angle outside (-pi/2, pi/2)";
      return report;
    }
  }
  const Vec h = shaping_H_curvature(config, eq.v_bar, eq);
  const auto edges = topology.edge_list();
  report.pass = true;
  for (int i = 0; i < topology.nodes(); ++i) {
    GershgorinRow row;
    row.node = i;
    row.m_ii = topology.shunt_susceptance()(i) + h(i);
    for (int k : topology.incident_edges(i)) {
      const int l = topology.other_end(k, i);
      const double b = edges[k].susceptance;
      const double s = std::sin(eta(k));
      const double c = std::cos(eta(k));
      row.m_ii += b * (1.0 - (eq.v_bar(l) / eq.v_bar(i)) * s * s / c);
      row.radius += b / c;
    }
    row.pass = row.m_ii - row.radius > kSlack;
    report.pass = report.pass && row.pass;
    report.rows.push_back(row);
  }
  return report;
}

HessianCheck hessian_pd_check(const NetworkTopology& topology, const ControllerConfig& config,
                              const Equilibrium& eq) {
  const Mat h = hessian(topology, config, topology.to_phi(eq.theta0), eq.v_bar, eq);
  HessianCheck out;
  out.min_eigenvalue = min_symmetric_eigenvalue(h);
  out.positive_definite = out.min_eigenvalue > kSlack;
  return out;
}

CutsetEnumeration enumerate_nonincident_cutsets(const NetworkTopology& topology, std::uint64_t seed,
                                                int samples) {
  CutsetEnumeration out;
  if (topology.nodes() < 2) return out;
  if (topology.edges() <= 20) {
    std::vector<int> chosen;
    std::vector<char> used(topology.nodes(), 0);
    for (std::size_t size = 1; size <= static_cast<std::size_t>(topology.nodes() / 2); ++size) {
      enumerate_matchings(topology, size, 0, chosen, used, out.cutsets);
    }
    return out;
  }
  out.exhaustive = false;
  out.cutsets = sample_cuts(topology, seed, samples);
  std::sort(out.cutsets.begin(), out.cutsets.end(), shorter_then_lexicographic);
  return out;
}

std::vector<int> cut_side(const NetworkTopology& topology, const std::vector<int>& cut) {
  const std::vector<int> label = components_without(topology, cut);
  std::vector<int> side;
  for (int i = 0; i < topology.nodes(); ++i) {
    if (label[i] == label[0]) side.push_back(i);
  }
  return side;
}

Mat center_matrix(const NetworkTopology& topology, const ControllerConfig& config,
                  const Equilibrium& eq) {
  const int n = topology.nodes();
  const int m = topology.edges();
  const Vec eta = eq.edge_angles(topology);
  const Vec gamma = topology.gamma(eq.v_bar);
  const Vec c = eta.array().cos();
  const Vec s = eta.array().sin();
  Mat out(m + n, m + n);
  out.topLeftCorner(m, m) = gamma.cwiseProduct(c).asDiagonal();
  const Mat cross =
      gamma.cwiseProduct(s).asDiagonal() * topology.absolute_incidence().transpose() *
      eq.v_bar.cwiseInverse().asDiagonal();
  out.topRightCorner(m, n) = cross;
  out.bottomLeftCorner(n, m) = cross.transpose();
  Mat vv = topology.loopy_laplacian(c);
  vv.diagonal() += shaping_H_curvature(config, eq.v_bar, eq);
  out.bottomRightCorner(n, n) = vv;
  return out;
}

Vec cutset_beta(const NetworkTopology& topology, const ControllerConfig& config,
                const Equilibrium& eq) {
  const Vec h = shaping_H_curvature(config, eq.v_bar, eq);
  const Vec& diag = topology.diag_term();
  const auto edges = topology.edge_list();
  Vec beta(topology.edges());
  for (int k = 0; k < topology.edges(); ++k) {
    const int i = edges[k].from;
    const int j = edges[k].to;
    const double b = edges[k].susceptance;
    const double vi = eq.v_bar(i);
    const double vj = eq.v_bar(j);
    beta(k) = 2.0 * std::max((diag(i) + h(i)) * vi / (b * vj), (diag(j) + h(j)) * vj / (b * vi));
  }
  return beta;
}

std::optional<CutsetWitness> instability_certificate(const NetworkTopology& topology,
                                                     const ControllerConfig& config,
                                                     const Equilibrium& eq,
                                                     const CutsetEnumeration& cutsets) {
  const Vec eta = eq.edge_angles(topology);
  const Vec beta = cutset_beta(topology, config, eq);
  std::vector<int> outside;
  for (int k = 0; k < topology.edges(); ++k) {
    if (std::abs(eta(k)) >= kHalfPi) outside.push_back(k);
  }
  if (!outside.empty()) return make_witness(topology, config, eq, outside, eta, beta, true);

  for (const auto& cut : cutsets.cutsets) {
    const bool holds = std::all_of(cut.begin(), cut.end(), [&](int k) {
      const double s = std::sin(eta(k));
      return s * s > beta(k) * std::cos(eta(k)) + kSlack;
    });
    if (holds) return make_witness(topology, config, eq, cut, eta, beta, false);
  }
  return std::nullopt;
}

std::optional<CutsetWitness> instability_certificate(const NetworkTopology& topology,
                                                     const ControllerConfig& config,
                                                     const Equilibrium& eq) {
  return instability_certificate(topology, config, eq, enumerate_nonincident_cutsets(topology));
}

PortHamiltonianFactors port_hamiltonian_factors(const NetworkTopology& topology,
                                                const ControllerConfig& config,
                                                const Equilibrium& eq) {
  const int n = topology.nodes();
  const int size = 3 * n - 1;
  PortHamiltonianFactors out;
  out.hessian = full_hessian(topology, config, topology.to_phi(eq.theta0), eq.v_bar, eq);

  // E^T = [I_{n-1}, -1] maps node frequencies to reduced angle rates.
  Mat e_t = Mat::Zero(n - 1, n);
  e_t.leftCols(n - 1).setIdentity();
  e_t.col(n - 1).setConstant(-1.0);
  const Vec k_over_t = config.k_p.cwiseQuotient(config.t_p);

  out.j = Mat::Zero(size, size);
  out.j.block(0, n - 1, n - 1, n) = e_t * k_over_t.asDiagonal();
  out.j.block(n - 1, 0, n, n - 1) = -(k_over_t.asDiagonal() * e_t.transpose());

  out.r = Mat::Zero(size, size);
  out.r.block(n - 1, n - 1, n, n) = k_over_t.cwiseQuotient(config.t_p).asDiagonal();
  out.r.bottomRightCorner(n, n) = dissipation_weight_x(config, eq.v_bar);
  return out;
}

Mat finite_difference_jacobian(const NetworkTopology& topology, const ControllerConfig& config,
                               const Equilibrium& eq) {
  const int n = topology.nodes();
  const int size = 3 * n - 1;
  auto field = [&](const Vec& x) {
    const Vec phi = x.head(n - 1);
    const Vec omega = x.segment(n - 1, n);
    const Vec V = x.tail(n);
    const PowerInjection pq = power_injection(topology, topology.from_phi(phi), V);
    Vec out(size);
    out.head(n - 1) = omega.head(n - 1).array() - omega(n - 1);
    out.segment(n - 1, n) = frequency_field(config, omega, pq.P, eq.u_p_bar).cwiseQuotient(config.t_p);
    out.tail(n) = voltage_field(config, V, pq.Q, eq.u_q_bar).cwiseQuotient(config.t_q);
    return out;
  };
  Vec x0(size);
  x0 << topology.to_phi(eq.theta0), Vec::Constant(n, eq.omega0), eq.v_bar;
  Mat jac(size, size);
  for (int c = 0; c < size; ++c) {
    const double step = 1e-6 * std::max(1.0, std::abs(x0(c)));
    Vec plus = x0;
    Vec minus = x0;
    plus(c) += step;
    minus(c) -= step;
    jac.col(c) = (field(plus) - field(minus)) / (2.0 * step);
  }
  return jac;
}

JacobianReport jacobian_instability_check(const NetworkTopology& topology,
                                          const ControllerConfig& config, const Equilibrium& eq) {
  JacobianReport report;
  report.informational = config.kind == ControllerKind::EArp;
  const PortHamiltonianFactors f = port_hamiltonian_factors(topology, config, eq);
  const Mat jac = (f.j - f.r) * f.hessian;
  const Mat fd = finite_difference_jacobian(topology, config, eq);
  report.factorization_mismatch =
      (jac - fd).cwiseAbs().maxCoeff() / std::max(1.0, jac.cwiseAbs().maxCoeff());

  Eigen::EigenSolver<Mat> solver(jac, false);
  const auto values = solver.eigenvalues();
  report.max_real = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    report.eigenvalues.push_back(values(i));
    report.max_real = std::max(report.max_real, values(i).real());
  }
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end(),
            [](const auto& a, const auto& b) {
              return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
            });
  report.unstable = report.max_real > 1e-8;
  return report;
}

Certificate certify(const NetworkTopology& topology, const ControllerConfig& config,
                    const Equilibrium& eq) {
  Certificate cert;
  cert.gershgorin = gershgorin_convexity_check(topology, config, eq);
  cert.hessian = hessian_pd_check(topology, config, eq);
  const CutsetEnumeration cutsets = enumerate_nonincident_cutsets(topology);
  cert.cutsets_exhaustive = cutsets.exhaustive;
  cert.cutset = instability_certificate(topology, config, eq, cutsets);
  cert.jacobian = jacobian_instability_check(topology, config, eq);
  if (cert.gershgorin.pass) {
    cert.verdict = Verdict::ConvexCertified;
  } else if (cert.cutset && config.kind != ControllerKind::EArp) {
    cert.verdict = Verdict::UnstableCertified;
  } else {
    cert.verdict = Verdict::Inconclusive;
  }
  return cert;
}

}  // namespace bregmangrid
