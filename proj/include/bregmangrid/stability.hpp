#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bregmangrid/config.hpp"
#include "bregmangrid/equilibrium.hpp"
#include "bregmangrid/topology.hpp"
#include "bregmangrid/types.hpp"

namespace bregmangrid {

enum class Verdict { ConvexCertified, UnstableCertified, Inconclusive };
std::string_view to_string(Verdict verdict);

struct GershgorinRow {
  int node = 0;
  double m_ii = 0.0;
  double radius = 0.0;  ///< sum over incident lines of B_il sec(eta_k)
  bool pass = false;
};

struct GershgorinReport {
  bool precondition_ok = true;  ///< every line angle inside (-pi/2, pi/2)
  std::string reason;
  std::vector<GershgorinRow> rows;
  bool pass = false;
};

/// Diagonal-dominance test for strict convexity of the storage function at
/// the equilibrium. Rows are only filled when the precondition holds.
GershgorinReport gershgorin_convexity_check(const NetworkTopology& topology,
                                            const ControllerConfig& config, const Equilibrium& eq);

struct HessianCheck {
  double min_eigenvalue = 0.0;
  bool positive_definite = false;  ///< min eigenvalue > 1e-10
};
HessianCheck hessian_pd_check(const NetworkTopology& topology, const ControllerConfig& config,
                              const Equilibrium& eq);

struct CutsetEnumeration {
  /// Edge index sets, increasing cardinality, lexicographic within a cardinality.
  std::vector<std::vector<int>> cutsets;
  bool exhaustive = true;
};

/// Minimal cut-sets whose lines are pairwise vertex-disjoint. Exhaustive for
/// up to 20 lines; above that, cuts around randomly grown connected regions
/// are sampled and `exhaustive` is false.
CutsetEnumeration enumerate_nonincident_cutsets(const NetworkTopology& topology,
                                                std::uint64_t seed = 0, int samples = 4000);

/// Node set on one side of a cut (the side holding the lowest node index).
std::vector<int> cut_side(const NetworkTopology& topology, const std::vector<int>& cut);

/// Center matrix of the factored Hessian in line/voltage coordinates, size (m+n):
///   [ Gamma [cos eta]                 [sin eta] Gamma |D|^T [V]^{-1} ]
///   [ (transpose)                     A(cos eta) + [h(V)]            ]
Mat center_matrix(const NetworkTopology& topology, const ControllerConfig& config,
                  const Equilibrium& eq);

/// beta_k = 2 max{(B_ii + h_i) V_i / (B_ij V_j), (B_jj + h_j) V_j / (B_ij V_i)}.
Vec cutset_beta(const NetworkTopology& topology, const ControllerConfig& config,
                const Equilibrium& eq);

struct CutsetEdgeValue {
  int edge = 0;
  double sin2 = 0.0;      ///< sin^2 eta_k
  double beta_cos = 0.0;  ///< beta_k cos eta_k
};

struct CutsetWitness {
  std::vector<int> edges;
  std::vector<CutsetEdgeValue> values;
  bool security_violation = false;  ///< some |eta_k| >= pi/2
  double center_min_eigenvalue = 0.0;
  double test_vector_value = 0.0;  ///< v^T M v for the explicit test vector
};

std::optional<CutsetWitness> instability_certificate(const NetworkTopology& topology,
                                                     const ControllerConfig& config,
                                                     const Equilibrium& eq,
                                                     const CutsetEnumeration& cutsets);
std::optional<CutsetWitness> instability_certificate(const NetworkTopology& topology,
                                                     const ControllerConfig& config,
                                                     const Equilibrium& eq);

/// Skew part J, dissipative part R and full Hessian in (phi, omega, V) such
/// that the linearization with constant inputs is (J - R) Hess.
struct PortHamiltonianFactors {
  Mat j;
  Mat r;
  Mat hessian;
};
PortHamiltonianFactors port_hamiltonian_factors(const NetworkTopology& topology,
                                                const ControllerConfig& config,
                                                const Equilibrium& eq);

/// Linearization by central differences of the (phi, omega, V) vector field
/// with inputs held at their equilibrium values.
Mat finite_difference_jacobian(const NetworkTopology& topology, const ControllerConfig& config,
                               const Equilibrium& eq);

struct JacobianReport {
  std::vector<std::complex<double>> eigenvalues;
  double max_real = 0.0;
  bool unstable = false;        ///< max real part > 1e-8
  bool informational = false;   ///< EArp: outside the kinds covered by the factorization
  double factorization_mismatch = 0.0;  ///< relative gap between (J - R) Hess and the FD Jacobian
};
JacobianReport jacobian_instability_check(const NetworkTopology& topology,
                                          const ControllerConfig& config, const Equilibrium& eq);

struct Certificate {
  Verdict verdict = Verdict::Inconclusive;
  GershgorinReport gershgorin;
  HessianCheck hessian;
  std::optional<CutsetWitness> cutset;
  bool cutsets_exhaustive = true;
  JacobianReport jacobian;
};

/// ConvexCertified iff the Gershgorin test passes, UnstableCertified iff a
/// cut-set witness exists and the kind is not EArp, Inconclusive otherwise.
/// For EArp a witness only shows an indefinite Hessian and is reported
/// without an instability verdict. The eigenvalue checks never change the verdict.
Certificate certify(const NetworkTopology& topology, const ControllerConfig& config,
                    const Equilibrium& eq);

}  // namespace bregmangrid
