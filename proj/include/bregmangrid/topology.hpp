#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bregmangrid/types.hpp"

namespace bregmangrid {

/// Undirected line between two inverter nodes (0-based, from < to).
struct Edge {
  int from = 0;
  int to = 0;
  double susceptance = 0.0;  ///< B_ij > 0, negative of the line susceptance
};

/// Network-reduced microgrid graph.
///
/// Edges are kept sorted by (from, to) with from < to; column k of the
/// incidence matrix carries +1 at `from` and -1 at `to`. The last node is
/// the angle reference for the reduced coordinates phi_i = theta_i - theta_n.
/// Instances are immutable once built.
class NetworkTopology {
 public:
  /// Validates and builds the graph. Node indices in `edges` are 0-based and
  /// may be given in either orientation; they are normalized and sorted.
  /// Throws ConfigError for self loops, duplicate lines, non-positive line
  /// susceptances, negative shunts, all-zero shunts or a disconnected graph.
  NetworkTopology(std::vector<double> shunt_susceptance, std::vector<Edge> edges);

  int nodes() const { return n_; }
  int edges() const { return static_cast<int>(edges_.size()); }
  std::span<const Edge> edge_list() const { return edges_; }

  const Mat& incidence() const { return incidence_; }
  const Mat& reduced_incidence() const { return reduced_incidence_; }
  const Mat& e_matrix() const { return e_matrix_; }
  const Vec& edge_susceptance() const { return edge_b_; }
  const Vec& shunt_susceptance() const { return shunt_b_; }
  const Vec& diag_term() const { return diag_b_; }

  /// Edges incident to node i, by edge index.
  std::span<const int> incident_edges(int node) const { return incident_[node]; }
  std::optional<int> edge_index(int i, int j) const;
  int other_end(int edge, int node) const;

  bool is_tree() const { return edges() == n_ - 1; }

  Mat absolute_incidence() const;

  /// Diagonal entries of Gamma(V): gamma_k = V_i V_j B_ij for k ~ {i, j}.
  Vec gamma(const Vec& voltage) const;

  /// Loopy Laplacian: B_ii on the diagonal, -B_ij c_k off-diagonal.
  Mat loopy_laplacian(const Vec& edge_cosines) const;

  /// Laplacian with unit weights on every line.
  Mat unit_laplacian() const;

  /// eta = D^T theta.
  Vec edge_angles(const Vec& theta) const;
  /// eta = D_1^T phi.
  Vec edge_angles_phi(const Vec& phi) const;

  Vec to_phi(const Vec& theta) const;
  /// theta with theta_n = 0 for the given reduced coordinates.
  Vec from_phi(const Vec& phi) const;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> incident_;
  Mat incidence_;
  Mat reduced_incidence_;
  Mat e_matrix_;
  Vec edge_b_;
  Vec shunt_b_;
  Vec diag_b_;
};

}  // namespace bregmangrid
