/*
 Copyright 2026 The eid-lab Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "eidlab/catalog.hpp"
#include "eidlab/certify.hpp"
#include "fixtures.hpp"

namespace eid {
namespace {

std::vector<StatePair> pairs_for(const System& sys, double state, double eq, std::size_t count,
                                 std::uint64_t seed) {
  const Eigen::Index n = sys.n();
  return sample_pairs(EquilibriumMap(sys), fixtures::box(n, -state, state),
                      fixtures::box(n, -eq, eq), count, seed);
}

/// ρ bound from the input-matching and drift conditions for the gradient
/// system with feedthrough, derived by hand for the worst case Δ∇φ = μΔx.
double rho_max(double mu, double g, double j, double nu) {
  const double d = j - nu;
  return std::min(d / (j * j), mu * d / (g * g * d + mu * j * j));
}

TEST(Bregman, Examples) {
  Matrix P(2, 2);
  P << 2, 0.5, 0.5, 1;
  const StorageGenerator q = StorageGenerator::quadratic(P);
  const Vector x = (Vector(2) << 1.0, -2.0).finished(), xb = (Vector(2) << 0.3, 0.4).finished();
  EXPECT_NEAR(bregman(q, xb, x), 0.5 * (x - xb).dot(P * (x - xb)), 1e-14);

  StorageGenerator quartic;
  quartic.V = [](const Vector& z) { return std::pow(z(0), 4); };
  quartic.grad = [](const Vector& z) -> Vector { return Vector::Constant(1, 4 * std::pow(z(0), 3)); };
  EXPECT_DOUBLE_EQ(bregman(quartic, Vector::Constant(1, 1.0), Vector::Constant(1, 2.0)), 11.0);

  const SeparablePotential phi{(Vector(3) << 1, 2, 0.5).finished(), (Vector(3) << 0.3, 1, 2).finished()};
  const Vector z = (Vector(3) << 0.1, -4.2, 7.0).finished();
  EXPECT_EQ(bregman(phi.generator(), z, z), 0.0);
}

TEST(Bregman, PropertiesOnRandomGenerators) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::size_t probes = 0;
  for (int g = 0; g < 10; ++g) {
    const SeparablePotential phi{Vector::NullaryExpr(3, [&] { return 0.2 + 2.0 * u01(rng); }),
                                 Vector::NullaryExpr(3, [&] { return 3.0 * u01(rng); })};
    const StorageGenerator gen = phi.generator();
    for (int i = 0; i < 1000; ++i, ++probes) {
      const Vector xb = 6.0 * Vector::NullaryExpr(3, [&] { return u01(rng) - 0.5; });
      const Vector x = 6.0 * Vector::NullaryExpr(3, [&] { return u01(rng) - 0.5; });
      const Vector z = 6.0 * Vector::NullaryExpr(3, [&] { return u01(rng) - 0.5; });
      const double vx = bregman(gen, xb, x);
      EXPECT_GE(vx, 0.5 * gen.mu * (x - xb).squaredNorm() - 1e-12);
      // x ↦ V_x̄(x) is convex: secant of its gradient ∇V(x) − ∇V(x̄) is monotone.
      const Vector gx = gen.grad(x) - gen.grad(xb), gz = gen.grad(z) - gen.grad(xb);
      EXPECT_GE((gx - gz).dot(x - z), -1e-12);
    }
  }
  EXPECT_EQ(probes, 10000u);
}

TEST(VerifyCt, PortHamiltonianExactCertificate) {
  const CatalogEntry e = catalog_entry("port_hamiltonian", fixtures::port_hamiltonian_params());
  const auto pairs = pairs_for(e.system, 2.0, 1.5, 500, 3);
  CertifyOptions opts;
  opts.mode = CheckMode::Equality;
  opts.W = *e.W;
  opts.ell = e.ell;
  const EidCertificate c = verify_eid_ct(e.system, SupplyRate::passivity(2), *e.storage, pairs, opts);
  EXPECT_TRUE(c.passed()) << failure_name(c.reason);
  EXPECT_EQ(c.k, 4);
  EXPECT_LE(c.stats.max_drift_violation, 1e-9);
  EXPECT_LE(c.stats.max_input_residual, 1e-9);
  EXPECT_LE(c.stats.feedthrough_residual, 1e-9);
  EXPECT_EQ(c.pair_count, 501u);

  // Without the closed-form ℓ the least-squares choice gives ℓ = 0, so only
  // the inequality direction holds.
  const EidCertificate ls = verify_eid_ct(e.system, SupplyRate::passivity(2), *e.storage, pairs);
  EXPECT_TRUE(ls.passed());
  CertifyOptions eq;
  eq.mode = CheckMode::Equality;
  EXPECT_FALSE(verify_eid_ct(e.system, SupplyRate::passivity(2), *e.storage, pairs, eq).passed());
}

TEST(VerifyCt, GradientFeedthroughRegion) {
  const double mu = 2.0, g = 1.0, j = 0.9;
  const CatalogEntry e = catalog_entry("gradient_ff", fixtures::gradient_ff_params(mu, 0.5));
  const auto pairs = pairs_for(e.system, 3.0, 2.0, 400, 12);
  auto certify = [&](double nu, double rho) {
    return verify_eid_ct(e.system, SupplyRate::ifp_osp(2, rho, nu), *e.storage, pairs);
  };
  for (double nu : {0.0, 0.3, 0.6, 0.85}) {
    const double rm = rho_max(mu, g, j, nu);
    EXPECT_TRUE(certify(nu, 0.98 * rm).passed()) << nu;
    EXPECT_TRUE(certify(nu, 0.0).passed()) << nu;
  }
  // Outside: either the feedthrough block is negative or the drift bound breaks.
  const EidCertificate out16 = certify(0.95, 0.0);
  EXPECT_FALSE(out16.passed());
  EXPECT_EQ(out16.reason, FailureReason::RhatNotPsd);
  const CatalogEntry quad = catalog_entry("gradient_ff", fixtures::gradient_ff_params(mu, 0.0));
  const auto qpairs = pairs_for(quad.system, 3.0, 2.0, 400, 12);
  const EidCertificate out18 = verify_eid_ct(
      quad.system, SupplyRate::ifp_osp(2, rho_max(mu, g, j, 0.2) + 0.02, 0.2), *quad.storage, qpairs);
  EXPECT_FALSE(out18.passed());
  EXPECT_EQ(out18.reason, FailureReason::Drift);
}

TEST(VerifyCt, AhuAtOptimalGain) {
  for (const Json& params : {fixtures::ahu_params_k0(), fixtures::ahu_params_k2()}) {
    const CatalogEntry e = catalog_entry("ahu_saddle", params);
    const Matrix A = json_to_matrix(params["A"], "A");
    const Matrix K = params.contains("K") ? json_to_matrix(params["K"], "K")
                                          : Matrix::Zero(A.rows(), A.rows());
    const double lmin = min_eigenvalue(Matrix::Identity(4, 4) + A.transpose() * K * A);
    const double gamma = 1.0 / lmin;
    const auto pairs = pairs_for(e.system, 2.0, 1.5, 400, 5);
    const EidCertificate c =
        verify_eid_ct(e.system, SupplyRate::l2_gain(4, 4, gamma), *e.storage, pairs);
    EXPECT_TRUE(c.passed()) << failure_name(c.reason) << " " << c.stats.max_drift_violation;
    EXPECT_FALSE(verify_eid_ct(e.system, SupplyRate::l2_gain(4, 4, 0.9 * gamma), *e.storage, pairs)
                     .passed());
  }
}

TEST(VerifyDt, IntegratorExactAndFeedthroughFailure) {
  const double alpha = 0.2;
  const CatalogEntry e = catalog_entry("dt_integrator", Json{{"alpha", alpha}, {"n", 2}});
  const auto pairs = pairs_for(e.system, 3.0, 2.0, 300, 4);
  const SupplyRate w(Matrix::Zero(2, 2), 0.5 * Matrix::Identity(2, 2),
                     0.5 * alpha * Matrix::Identity(2, 2));
  CertifyOptions opts;
  opts.mode = CheckMode::Equality;
  opts.W = *e.W;
  opts.ell = e.ell;
  const DtEidCertificate c = verify_eid_dt(e.system, w, *e.P, pairs, opts);
  EXPECT_TRUE(c.passed());
  EXPECT_EQ(c.stats.max_drift_violation, 0.0);
  EXPECT_EQ(c.stats.max_input_residual, 0.0);

  const SupplyRate tight(Matrix::Zero(2, 2), 0.5 * Matrix::Identity(2, 2),
                         (0.5 * alpha - 0.01) * Matrix::Identity(2, 2));
  const DtEidCertificate f = verify_eid_dt(e.system, tight, *e.P, pairs);
  EXPECT_FALSE(f.passed());
  EXPECT_EQ(f.reason, FailureReason::RhatNotPsd);
}

TEST(VerifyDt, ScalarLtiMatchesHandAlgebra) {
  // x⁺ = 0.5x + u, y = x, storage P x², supply −y² + γ²u². Eliminating ℓ
  // leaves P(1 − a²) − 1 − (aP)²/(γ² − P) ≥ 0 with a = 0.5.
  const System s = catalog_build("lti", Json{{"F", 0.5}, {"G", 1}, {"H", 1}, {"discrete", true}});
  const auto pairs = pairs_for(s, 3.0, 0.0, 100, 2);
  auto oracle = [](double P, double gamma) {
    const double a = 0.5;
    return gamma * gamma > P && P * (1 - a * a) - 1 - (a * P) * (a * P) / (gamma * gamma - P) >= 0;
  };
  for (double P : {0.5, 2.0, 4.0}) {
    for (double gamma : {1.9, 2.5, 3.0, 10.0}) {
      const bool pass =
          verify_eid_dt(s, SupplyRate::l2_gain(1, 1, gamma), Matrix::Constant(1, 1, P), pairs)
              .passed();
      EXPECT_EQ(pass, oracle(P, gamma)) << "P=" << P << " gamma=" << gamma;
    }
  }
}

TEST(FactorDissipation, Examples) {
  const CatalogEntry ph = catalog_entry("port_hamiltonian", fixtures::port_hamiltonian_params());
  const auto pairs = pairs_for(ph.system, 2.0, 1.5, 20, 6);
  const FactorizationResult d =
      factor_dissipation(ph.system, SupplyRate::passivity(2), *ph.storage, pairs[0].xbar, pairs[0].xbar);
  EXPECT_EQ(d.a, 0.0);
  EXPECT_TRUE(d.b_diff.isZero(0.0));
  EXPECT_EQ(d.margin, 0.0);

  // Outside the region (ν beyond j) the feedthrough block is negative.
  const CatalogEntry gf = catalog_entry("gradient_ff", fixtures::gradient_ff_params(2.0, 0.0));
  const auto gpairs = pairs_for(gf.system, 2.0, 1.0, 20, 6);
  double worst = INFINITY;
  for (const auto& pr : gpairs)
    worst = std::min(worst, factor_dissipation(gf.system, SupplyRate::ifp_osp(2, 0.0, 0.95),
                                               *gf.storage, pr.x, pr.xbar)
                                .margin);
  EXPECT_LT(worst, 0.0);
}

TEST(FactorDissipation, ShiftedClassicalStorageIsNotEid) {
  const CatalogEntry e = catalog_entry("second_order", Json{{"U_mu", 1.0}, {"U_c", 0.5}});
  const EquilibriumMap emap(e.system);
  const Vector xbar = (Vector(2) << 1.0, 0.0).finished();
  const double ubar = ku_ky(emap, xbar).u(0);
  ASSERT_GT(ubar, 0.0);
  const StorageFamily shifted = StorageFamily::shifted(*e.storage);
  std::mt19937_64 rng(3);
  double worst = INFINITY, worst_bregman = INFINITY;
  for (int i = 0; i < 200; ++i) {
    const Vector x = uniform_in_box(rng, Vector::Constant(2, -2), Vector::Constant(2, 2));
    const FactorizationResult f =
        factor_dissipation(e.system, SupplyRate::passivity(1), shifted, x, xbar);
    // Hand derivation: a = x₂² − x₂ū, b = 0, R̂ = 0.
    EXPECT_NEAR(f.a, x(1) * x(1) - x(1) * ubar, 1e-12);
    worst = std::min(worst, f.margin);
    worst_bregman = std::min(
        worst_bregman,
        factor_dissipation(e.system, SupplyRate::passivity(1), *e.storage, x, xbar).margin);
  }
  EXPECT_LT(worst, -1e-2);
  EXPECT_GE(worst_bregman, -1e-12);
}

TEST(FactorDissipation, ConsistentWithPassingCertificates) {
  const CatalogEntry gf = catalog_entry("gradient_ff", fixtures::gradient_ff_params(2.0, 0.5));
  const auto pairs = pairs_for(gf.system, 3.0, 2.0, 300, 8);
  const SupplyRate w = SupplyRate::ifp_osp(2, 0.5, 0.2);
  const EidCertificate c = verify_eid_ct(gf.system, w, *gf.storage, pairs);
  ASSERT_TRUE(c.passed());
  double worst = 0.0;
  for (const auto& pr : pairs)
    worst = std::min(worst, factor_dissipation(gf.system, w, *gf.storage, pr.x, pr.xbar).margin);
  const double c_emp = -worst / c.tol.a;
  RecordProperty("empirical_c", std::to_string(c_emp));
  EXPECT_LE(c_emp, 2.0);
}

TEST(Cocycle, DifferenceFormEll) {
  const CatalogEntry ph = catalog_entry("port_hamiltonian", fixtures::port_hamiltonian_params());
  std::mt19937_64 rng(41);
  const Vector lo = Vector::Constant(4, -3), hi = Vector::Constant(4, 3);
  for (int i = 0; i < 1000; ++i) {
    const Vector x1 = uniform_in_box(rng, lo, hi), x2 = uniform_in_box(rng, lo, hi),
                 x3 = uniform_in_box(rng, lo, hi);
    const Vector sum = ph.ell(x1, x2) + ph.ell(x2, x3) + ph.ell(x3, x1);
    EXPECT_LE(sum.norm(), 1e-14);
  }
}

TEST(BoundedRealSpecialization, MatchesDirectEvaluation) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 10; ++t) {
    const Matrix F = Matrix::NullaryExpr(3, 3, [&] { return 0.5 * nd(rng); }) - 2.0 * Matrix::Identity(3, 3);
    const Matrix G = Matrix::NullaryExpr(3, 2, [&] { return nd(rng); });
    const Matrix H = Matrix::NullaryExpr(2, 3, [&] { return nd(rng); });
    const Matrix J = Matrix::NullaryExpr(2, 2, [&] { return 0.3 * nd(rng); });
    const System s = catalog_build("lti", Json{{"F", matrix_to_json(F)}, {"G", matrix_to_json(G)},
                                               {"H", matrix_to_json(H)}, {"J", matrix_to_json(J)}});
    const Matrix B = Matrix::NullaryExpr(3, 3, [&] { return nd(rng); });
    const Matrix P = B * B.transpose() + Matrix::Identity(3, 3);
    const double gamma = 5.0;
    const Matrix Wsq = gamma * gamma * Matrix::Identity(2, 2) - J.transpose() * J;
    const Eigen::SelfAdjointEigenSolver<Matrix> es(Wsq);
    const Matrix W = es.operatorSqrt();
    const auto pairs = pairs_for(s, 2.0, 1.0, 50, 100 + t);
    CertifyOptions opts;
    opts.W = W;
    opts.mode = CheckMode::Equality;
    const EidCertificate c =
        verify_eid_ct(s, SupplyRate::l2_gain(2, 2, gamma), StorageGenerator::quadratic(P), pairs, opts);
    // Direct evaluation of the three bounded-real lines.
    EXPECT_LE((W.transpose() * W - (gamma * gamma * Matrix::Identity(2, 2) - J.transpose() * J)).norm(),
              1e-10);
    EXPECT_NEAR(c.stats.feedthrough_residual,
                (W.transpose() * W - gamma * gamma * Matrix::Identity(2, 2) + J.transpose() * J).norm(),
                1e-12);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const Vector dx = pairs[i].x - pairs[i].xbar;
      const Vector dgrad = P * dx, dh = H * dx;
      const Vector ell = W.transpose().fullPivLu().solve(-J.transpose() * dh - 0.5 * G.transpose() * dgrad);
      const double line1 = dgrad.dot(F * dx) + dh.squaredNorm() + ell.squaredNorm();
      const double line2 = (0.5 * G.transpose() * dgrad + J.transpose() * dh + W.transpose() * ell).norm();
      EXPECT_NEAR(c.drift_slack[i], line1, 1e-10 * std::max(1.0, std::abs(line1)));
      EXPECT_NEAR(c.input_residual[i], line2, 1e-10);
    }
  }
}

TEST(CheckSector, Examples) {
  const SectorBounds b(0.2 * Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  const auto probes = sector_probes(1, 500, 3.0, 4);
  const SectorReport mid = check_sector(StaticNonlinearity::linear(0.6 * Matrix::Identity(1, 1)), b, probes);
  const SectorReport sat = check_sector(StaticNonlinearity::saturation(1, 0.2, 1.0), b, probes);
  EXPECT_TRUE(mid.pass);
  EXPECT_TRUE(sat.pass);
  EXPECT_NEAR(mid.min_normalized, 0.16, 1e-12);  // ¼K² with K = 0.8
  EXPECT_GE(mid.min_normalized, sat.min_normalized);
  const SectorBounds unit(Matrix::Zero(1, 1), Matrix::Identity(1, 1));
  const SectorReport steep = check_sector(StaticNonlinearity::linear(2.0 * Matrix::Identity(1, 1)), unit, probes);
  EXPECT_FALSE(steep.pass);
  EXPECT_EQ(steep.violations, steep.pairs);
}

TEST(Kyp, Examples) {
  const Matrix one = Matrix::Ones(1, 1), zero = Matrix::Zero(1, 1);
  const SupplyRate pass1 = SupplyRate::passivity(1);
  const KypReport p1 = verify_kyp_lti(-one, one, one, zero, pass1, one);
  // M = [[−2, ½], [½, 0]]: λ_max = −1 + √1.25.
  EXPECT_NEAR(p1.lambda_max, -1.0 + std::sqrt(1.25), 1e-14);
  EXPECT_FALSE(p1.pass);
  const KypReport ph = verify_kyp_lti(-one, one, one, zero, pass1, 0.5 * one);
  EXPECT_TRUE(ph.pass);
  EXPECT_TRUE(ph.M.isApprox((Matrix(2, 2) << -1, 0, 0, 0).finished()));

  const Matrix I2 = Matrix::Identity(2, 2), Z2 = Matrix::Zero(2, 2);
  const KypReport p2 = verify_kyp_lti(-I2, I2, I2, Z2, SupplyRate::passivity(2), 0.5 * I2);
  EXPECT_TRUE(p2.pass);
  EXPECT_NEAR(p2.lambda_max, 0.0, 1e-15);
  const KypReport p3 = verify_kyp_lti(-I2, I2, Z2, Z2, SupplyRate::passivity(2), Z2);
  EXPECT_TRUE(p3.M.isZero(0.0));
  EXPECT_TRUE(p3.pass);
  EXPECT_THROW((void)verify_kyp_lti(-I2, I2, I2, Z2, SupplyRate::passivity(1), Z2), Error);
}

TEST(Observability, SmibAndUnobservable) {
  const System smib = catalog_build("smib", fixtures::smib_params());
  const EquilibriumMap emap(smib);
  const auto s = sample_io_relation(emap, {(Vector(2) << -1, 0).finished(), (Vector(2) << 1, 0).finished()}, 10, 1);
  EXPECT_TRUE(linearized_observability(smib, s.samples).pass());
  const System blind = catalog_build(
      "lti", Json{{"F", Json::parse("[[-1,0],[0,-2]]")}, {"G", Json::parse("[[1],[1]]")}, {"H", Json::parse("[[1,0]]")}});
  const auto sb = sample_io_relation(EquilibriumMap(blind), fixtures::box(2, -1, 1), 5, 1);
  EXPECT_FALSE(linearized_observability(blind, sb.samples).pass());
}

TEST(CertificateJson, Fields) {
  const CatalogEntry e = catalog_entry("gradient_ff", fixtures::gradient_ff_params());
  const auto pairs = pairs_for(e.system, 1.0, 1.0, 10, 1);
  CertifyOptions opts;
  opts.seed = 42;
  const Json j = to_json(verify_eid_ct(e.system, SupplyRate::passivity(2), *e.storage, pairs, opts));
  EXPECT_EQ(j["verdict"], "Pass");
  EXPECT_EQ(j["seed"], 42);
  EXPECT_EQ(j["pairs"], 11);
  EXPECT_TRUE(j.contains("residuals"));
}

}  // namespace
}  // namespace eid
