#include "bregmangrid/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bregmangrid/errors.hpp"

namespace bregmangrid {

namespace {

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

NetworkTopology::NetworkTopology(std::vector<double> shunt_susceptance, std::vector<Edge> edges)
    : n_(static_cast<int>(shunt_susceptance.size())), edges_(std::move(edges)) {
  if (n_ < 1) {
    throw ConfigError("network must contain at least one node");
  }
  bool any_shunt = false;
  for (int i = 0; i < n_; ++i) {
    const double b = shunt_susceptance[i];
    if (!std::isfinite(b) || b < 0.0) {
      throw ConfigError("shunt susceptance of node " + std::to_string(i + 1) + " must be >= 0");
    }
    any_shunt = any_shunt || b > 0.0;
  }
  if (!any_shunt) {
    throw ConfigError("at least one node needs a positive shunt susceptance");
  }

  for (auto& e : edges_) {
    if (e.from < 0 || e.to < 0 || e.from >= n_ || e.to >= n_) {
      throw ConfigError("edge endpoint out of range");
    }
    if (e.from == e.to) {
      throw ConfigError("self loop at node " + std::to_string(e.from + 1));
    }
    if (!std::isfinite(e.susceptance) || e.susceptance <= 0.0) {
      throw ConfigError("line susceptance must be > 0");
    }
    if (e.from > e.to) std::swap(e.from, e.to);
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.from != b.from ? a.from < b.from : a.to < b.to;
  });
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    if (edges_[k].from == edges_[k - 1].from && edges_[k].to == edges_[k - 1].to) {
      throw ConfigError("duplicate line {" + std::to_string(edges_[k].from + 1) + "," +
                        std::to_string(edges_[k].to + 1) + "}; sum parallel susceptances instead");
    }
  }

  std::vector<int> parent(n_);
  std::iota(parent.begin(), parent.end(), 0);
  int components = n_;
  for (const auto& e : edges_) {
    const int a = find_root(parent, e.from);
    const int b = find_root(parent, e.to);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  if (components != 1) {
    throw ConfigError("network graph is not connected");
  }

  const int m = static_cast<int>(edges_.size());
  incident_.assign(n_, {});
  incidence_ = Mat::Zero(n_, m);
  edge_b_.resize(m);
  for (int k = 0; k < m; ++k) {
    const auto& e = edges_[k];
    incidence_(e.from, k) = 1.0;
    incidence_(e.to, k) = -1.0;
    edge_b_(k) = e.susceptance;
    incident_[e.from].push_back(k);
    incident_[e.to].push_back(k);
  }
  reduced_incidence_ = incidence_.topRows(n_ - 1);

  e_matrix_ = Mat::Zero(n_, n_ - 1);
  e_matrix_.topRows(n_ - 1).setIdentity();
  e_matrix_.row(n_ - 1).setConstant(-1.0);

  shunt_b_ = Eigen::Map<const Vec>(shunt_susceptance.data(), n_);
  diag_b_ = shunt_b_;
  for (const auto& e : edges_) {
    diag_b_(e.from) += e.susceptance;
    diag_b_(e.to) += e.susceptance;
  }
}

std::optional<int> NetworkTopology::edge_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  for (int k : incident_[i]) {
    if (edges_[k].from == i && edges_[k].to == j) return k;
  }
  return std::nullopt;
}

int NetworkTopology::other_end(int edge, int node) const {
  const auto& e = edges_[edge];
  return e.from == node ? e.to : e.from;
}

Mat NetworkTopology::absolute_incidence() const { return incidence_.cwiseAbs(); }

Vec NetworkTopology::gamma(const Vec& voltage) const {
  if ((voltage.array() <= 0.0).any()) {
    throw DomainError("gamma: voltages must be strictly positive");
  }
  Vec g(edges());
  for (int k = 0; k < edges(); ++k) {
    const auto& e = edges_[k];
    g(k) = voltage(e.from) * voltage(e.to) * e.susceptance;
  }
  return g;
}

Mat NetworkTopology::loopy_laplacian(const Vec& edge_cosines) const {
  Mat a = diag_b_.asDiagonal();
  for (int k = 0; k < edges(); ++k) {
    const auto& e = edges_[k];
    const double w = -e.susceptance * edge_cosines(k);
    a(e.from, e.to) = w;
    a(e.to, e.from) = w;
  }
  return a;
}

Mat NetworkTopology::unit_laplacian() const {
  Mat l = Mat::Zero(n_, n_);
  for (const auto& e : edges_) {
    l(e.from, e.from) += 1.0;
    l(e.to, e.to) += 1.0;
    l(e.from, e.to) -= 1.0;
    l(e.to, e.from) -= 1.0;
  }
  return l;
}

Vec NetworkTopology::edge_angles(const Vec& theta) const {
  Vec eta(edges());
  for (int k = 0; k < edges(); ++k) eta(k) = theta(edges_[k].from) - theta(edges_[k].to);
  return eta;
}

Vec NetworkTopology::edge_angles_phi(const Vec& phi) const {
  Vec eta(edges());
  for (int k = 0; k < edges(); ++k) {
    const auto& e = edges_[k];
    const double a = e.from < n_ - 1 ? phi(e.from) : 0.0;
    const double b = e.to < n_ - 1 ? phi(e.to) : 0.0;
    eta(k) = a - b;
  }
  return eta;
}

Vec NetworkTopology::to_phi(const Vec& theta) const {
  return theta.head(n_ - 1).array() - theta(n_ - 1);
}

Vec NetworkTopology::from_phi(const Vec& phi) const {
  Vec theta = Vec::Zero(n_);
  theta.head(n_ - 1) = phi;
  return theta;
}

}  // namespace bregmangrid
