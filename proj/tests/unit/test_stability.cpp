#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "bregmangrid/stability.hpp"
#include "bregmangrid/storage.hpp"
#include "helpers.hpp"

using namespace bregmangrid;

namespace {

Equilibrium constructed(const NetworkTopology& topo, ControllerConfig& cfg, const Vec& theta0, const Vec& v_bar) {
  cfg = setpoints_for(topo, cfg, theta0, v_bar);
  return make_equilibrium(topo, cfg, theta0, v_bar);
}

}  // namespace

TEST_CASE("Gershgorin on a single node") {
  NetworkTopology topo({0.4}, {});
  ControllerConfig cfg = ControllerConfig::defaults(topo, ControllerKind::ReactiveCurrent);
  const Equilibrium eq = constructed(topo, cfg, Vec::Zero(1), Vec::Ones(1));
  const GershgorinReport g = gershgorin_convexity_check(topo, cfg, eq);
  REQUIRE(g.rows.size() == 1);
  CHECK(g.rows[0].m_ii == doctest::Approx(0.4));
  CHECK(g.rows[0].radius == 0.0);
  CHECK(g.pass);
}

TEST_CASE("Gershgorin on a flat two-node line reduces to b > 0") {
  for (double b : {0.0, 0.2}) {
    const std::vector<double> shunt{b, b + (b == 0.0 ? 0.1 : 0.0)};
    NetworkTopology topo(shunt, {{0, 1, 3.0}});
    ControllerConfig cfg = ControllerConfig::defaults(topo, ControllerKind::ReactiveCurrent);
    const Equilibrium eq = constructed(topo, cfg, Vec::Zero(2), Vec::Ones(2));
    const GershgorinReport g = gershgorin_convexity_check(topo, cfg, eq);
    CHECK(g.rows[0].m_ii == doctest::Approx(b + 3.0));
    CHECK(g.rows[0].radius == doctest::Approx(3.0));
    CHECK(g.rows[0].pass == (b > 0.0));
  }
}

TEST_CASE("Gershgorin precondition outside the security region") {
  NetworkTopology topo({0.1, 0.1}, {{0, 1, 1.0}});
  ControllerConfig cfg = ControllerConfig::defaults(topo, ControllerKind::ReactiveCurrent);
  const Equilibrium eq = constructed(topo, cfg, (Vec(2) << 1.8, 0.0).finished(), Vec::Ones(2));
  const GershgorinReport g = gershgorin_convexity_check(topo, cfg, eq);
  CHECK_FALSE(g.precondition_ok);
  CHECK_FALSE(g.pass);
  CHECK_FALSE(g.reason.empty());
  const auto witness = instability_certificate(topo, cfg, eq);
  REQUIRE(witness.has_value());
  CHECK(witness->security_violation);
  CHECK(certify(topo, cfg, eq).verdict == Verdict::UnstableCertified);
}

TEST_CASE("Hessian loses definiteness before the angle reaches pi/2") {
  NetworkTopology topo({0.05, 0.05}, {{0, 1, 1.0}});
  double crossing = -1.0;
  for (int k = 0; k <= 200; ++k) {
    const double eta = 1.55 * k / 200.0;
    ControllerConfig cfg = ControllerConfig::defaults(topo, ControllerKind::ReactiveCurrent);
    const Equilibrium eq = constructed(topo, cfg, (Vec(2) << eta, 0.0).finished(), Vec::Ones(2));
    if (!hessian_pd_check(topo, cfg, eq).positive_definite) {
      crossing = eta;
      break;
    }
  }
  CHECK(crossing > 0.0);
  CHECK(crossing < kHalfPi);
}

TEST_CASE("non-incident cut-sets") {
  SUBCASE("path on three nodes") {
    const auto cuts = enumerate_nonincident_cutsets(oracle::path({1.0, 1.0}, {0.1, 0.1, 0.1}));
    CHECK(cuts.exhaustive);
    CHECK(cuts.cutsets == std::vector<std::vector<int>>{{0}, {1}});
  }
  SUBCASE("complete graph on four nodes has none") {
    std::vector<Edge> edges;
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) edges.push_back({i, j, 1.0});
    }
    CHECK(enumerate_nonincident_cutsets(NetworkTopology({0.1, 0.1, 0.1, 0.1}, edges)).cutsets.empty());
  }
  SUBCASE("four-cycle has the two pairs of opposite lines") {
    // sorted lines: (0,1) (0,3) (1,2) (2,3)
    const auto cuts = enumerate_nonincident_cutsets(oracle::ring(4, 1.0, 0.1));
    CHECK(cuts.cutsets == std::vector<std::vector<int>>{{0, 3}, {1, 2}});
  }
  SUBCASE("random graphs agree with brute force") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 40; ++trial) {
      const NetworkTopology topo = oracle::random_network(rng, 2 + static_cast<int>(rng() % 7), 0.4);
      if (topo.edges() > 20) continue;
      CHECK(enumerate_nonincident_cutsets(topo).cutsets == oracle::brute_force_cuts(topo));
    }
  }
  SUBCASE("large graphs are sampled") {
    std::mt19937_64 rng(62);
    const NetworkTopology topo = oracle::random_network(rng, 12, 0.4);
    REQUIRE(topo.edges() > 20);
    const auto cuts = enumerate_nonincident_cutsets(topo, 3, 500);
    CHECK_FALSE(cuts.exhaustive);
    const auto all = oracle::brute_force_cuts(topo);
    for (const auto& c : cuts.cutsets) CHECK(std::find(all.begin(), all.end(), c) != all.end());
  }
}

TEST_CASE("zero-flow equilibria never carry a cut-set witness") {
  std::mt19937_64 rng(63);
  for (int trial = 0; trial < 10; ++trial) {
    const NetworkTopology topo = oracle::random_network(rng, 5);
    ControllerConfig cfg = ControllerConfig::defaults(topo, ControllerKind::ConventionalDroop);
    const Equilibrium eq = constructed(topo, cfg, Vec::Zero(5), Vec::Ones(5));
    CHECK_FALSE(instability_certificate(topo, cfg, eq).has_value());
  }
}

TEST_CASE("stressed line yields a witness and an unstable Jacobian") {
  NetworkTopology topo({0.05, 0.05}, {{0, 1, 1.0}});
  ControllerConfig cfg = ControllerConfig::defaults(topo, ControllerKind::ReactiveCurrent);
  const Equilibrium eq = constructed(topo, cfg, (Vec(2) << 1.4, 0.0).finished(), Vec::Ones(2));
  const auto witness = instability_certificate(topo, cfg, eq);
  REQUIRE(witness.has_value());
  CHECK(witness->edges == std::vector<int>{0});
  // beta = 2 (B_11 + h) V_1 / (B_12 V_2) = 2.1
  CHECK(witness->values[0].beta_cos == doctest::Approx(2.1 * std::cos(1.4)));
  CHECK(witness->values[0].sin2 == doctest::Approx(std::pow(std::sin(1.4), 2)));
  CHECK(witness->center_min_eigenvalue < 0.0);
  CHECK(witness->test_vector_value < 0.0);
  const JacobianReport jac = jacobian_instability_check(topo, cfg, eq);
  CHECK(jac.unstable);
  CHECK(certify(topo, cfg, eq).verdict == Verdict::UnstableCertified);
}

TEST_CASE("port-Hamiltonian factors") {
  std::mt19937_64 rng(64);
  for (ControllerKind kind : testing_support::kAllKinds) {
    CAPTURE(to_string(kind));
    const auto inst = testing_support::random_instance(rng, kind);
    const PortHamiltonianFactors f = port_hamiltonian_factors(inst.topo, inst.cfg, inst.eq);
    CHECK((f.j + f.j.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((f.r - f.r.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Mat> eig(f.r);
    CHECK(eig.eigenvalues()(0) > -1e-12);
    const JacobianReport jac = jacobian_instability_check(inst.topo, inst.cfg, inst.eq);
    CHECK(jac.factorization_mismatch < 1e-6);
    CHECK(jac.informational == (kind == ControllerKind::EArp));
  }
}

TEST_CASE("convex certificate agrees with the eigenvalue checks") {
  std::mt19937_64 rng(65);
  int certified = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const ControllerKind kind = testing_support::kAllKinds[trial % 3];
    const auto inst = testing_support::random_instance(rng, kind);
    const Certificate cert = certify(inst.topo, inst.cfg, inst.eq);
    if (cert.verdict != Verdict::ConvexCertified) continue;
    ++certified;
    CHECK(cert.hessian.positive_definite);
    CHECK(cert.jacobian.max_real <= 1e-8);
  }
  CHECK(certified > 10);
}

TEST_CASE("boundary case is inconclusive") {
  NetworkTopology topo({0.05, 0.05}, {{0, 1, 1.0}});
  ControllerConfig cfg = ControllerConfig::defaults(topo, ControllerKind::ReactiveCurrent);
  const Equilibrium eq = constructed(topo, cfg, (Vec(2) << 0.6, 0.0).finished(), Vec::Ones(2));
  const Certificate cert = certify(topo, cfg, eq);
  CHECK_FALSE(cert.gershgorin.pass);
  CHECK_FALSE(cert.cutset.has_value());
  CHECK(cert.verdict == Verdict::Inconclusive);
}

TEST_CASE("cut-set witnesses on a four-cycle") {
  const NetworkTopology topo = oracle::ring(4, 1.0, 0.1);
  for (ControllerKind kind : testing_support::kAllKinds) {
    CAPTURE(to_string(kind));
    ControllerConfig cfg = ControllerConfig::defaults(topo, kind);
    cfg.k_q = Vec::Constant(4, 5.0);
    const Vec theta0 = (Vec(4) << 0.0, -1.5, -1.5, 0.0).finished();
    const Equilibrium eq = constructed(topo, cfg, theta0, Vec::Ones(4));
    const Certificate cert = certify(topo, cfg, eq);
    REQUIRE(cert.cutset.has_value());
    CHECK(cert.cutset->edges.size() == 2);
    CHECK(cert.cutset->center_min_eigenvalue < 0.0);
    CHECK(cert.cutset->test_vector_value < 0.0);
    CHECK_FALSE(cert.hessian.positive_definite);
    if (kind == ControllerKind::EArp) {
      CHECK(cert.jacobian.informational);
      CHECK(cert.verdict == Verdict::Inconclusive);
    } else {
      CHECK(cert.jacobian.unstable);
      CHECK(cert.verdict == Verdict::UnstableCertified);
    }
  }
}
