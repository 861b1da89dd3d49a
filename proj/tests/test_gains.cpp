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
#include <sstream>

#include "eidlab/catalog.hpp"
#include "eidlab/certify.hpp"
#include "eidlab/gains.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace eid {
namespace {

/// min over δ > 1/(2a) of (b + δ/2)/(a − 1/(2δ)).
double gamma_sq_oracle(double a, double b) {
  return oracle::golden_min_value(
      [=](double d) { return (b + d / 2) / (a - 1 / (2 * d)); }, 1 / (2 * a), 1 / a);
}

TEST(IfpOspGain, Examples) {
  EXPECT_EQ(ifp_osp_gain(1.0, 0.0).gamma, 1.0);
  EXPECT_DOUBLE_EQ(ifp_osp_gain(2.0, 0.0).gamma, 0.5);
  const GainBound g = ifp_osp_gain(1.5, 0.7);
  const double d = g.parameters.at("delta_star");
  EXPECT_NEAR((0.7 + d / 2) / (1.5 - 1 / (2 * d)), g.gamma * g.gamma, 1e-13);
  EXPECT_THROW((void)ifp_osp_gain(0.0, 1.0), Error);
  EXPECT_THROW((void)ifp_osp_gain(1.0, -0.1), Error);
}

TEST(IfpOspGain, MatchesGoldenSectionOnGrid) {
  int checked = 0;
  for (int i = 0; i < 10; ++i)
    for (int k = 0; k < 10; ++k) {
      const double a = 0.1 * std::pow(1.8, i), b = k == 0 ? 0.0 : 0.01 * std::pow(2.5, k);
      const double g2 = std::pow(ifp_osp_gain(a, b).gamma, 2);
      EXPECT_NEAR(g2, gamma_sq_oracle(a, b), 1e-10 * g2) << a << " " << b;
      ++checked;
    }
  EXPECT_EQ(checked, 100);
}

TEST(DtGradientGain, Examples) {
  EXPECT_NEAR(dt_gradient_gain(1.0, 1e-6).gamma, 1.0, 1e-3);
  EXPECT_NEAR(dt_gradient_gain(3.0, 1e-9).gamma, 1.0 / 3.0, 1e-6);
  EXPECT_LT(dt_gradient_gain(1.0, 0.1).gamma, dt_gradient_gain(1.0, 0.5).gamma);
  EXPECT_NEAR(std::pow(dt_gradient_gain(2.0, 0.25).gamma, 2), gamma_sq_oracle(2.0, 0.125), 1e-12);
  EXPECT_THROW((void)dt_gradient_gain(1.0, 0.0), Error);
  EXPECT_THROW((void)dt_gradient_gain(-1.0, 0.1), Error);
}

TEST(DtGradientGain, GridOracleAndMonotone) {
  for (int i = 0; i < 10; ++i) {
    const double mu = 0.2 * std::pow(1.6, i);
    double prev = 0.0;
    for (int k = 0; k < 10; ++k) {
      const double alpha = 0.01 * std::pow(2.0, k);
      const double g = dt_gradient_gain(mu, alpha).gamma;
      EXPECT_NEAR(g * g, gamma_sq_oracle(mu, alpha / 2), 1e-10 * g * g);
      EXPECT_GT(g, prev);
      prev = g;
    }
  }
}

TEST(AhuGain, Examples) {
  const Matrix A = json_to_matrix(fixtures::ahu_params_k0()["A"], "A");
  const Matrix I = Matrix::Identity(4, 4);
  EXPECT_DOUBLE_EQ(ahu_gain(I, A, Matrix::Zero(2, 2)).gamma, 1.0);
  EXPECT_DOUBLE_EQ(ahu_gain(2 * I, A, Matrix::Zero(2, 2)).gamma, 0.5);
  const GainBound g = ahu_gain(I, A, Matrix::Zero(2, 2), 1.5);
  EXPECT_DOUBLE_EQ(g.parameters.at("alpha"), 2 * 1.5 * 1.5 * 1.0);

  std::mt19937_64 rng(2);
  double prev = ahu_gain(I, A, Matrix::Zero(2, 2)).gamma;
  Matrix K = Matrix::Zero(2, 2);
  for (int t = 0; t < 20; ++t) {
    const Vector v = standard_normal(rng, 2);
    K += v * v.transpose();
    const double g = ahu_gain(I, A, K).gamma;
    EXPECT_LE(g, prev * (1 + 1e-12));
    prev = g;
  }
  const Matrix K2 = json_to_matrix(fixtures::ahu_params_k2()["K"], "K");
  const Matrix A2 = json_to_matrix(fixtures::ahu_params_k2()["A"], "A");
  EXPECT_NEAR(ahu_gain(I, A2, K2).gamma, 0.5, 1e-12);

  Matrix Ar = A;
  Ar.row(1) = 2 * Ar.row(0);
  try {
    (void)ahu_gain(I, Ar, Matrix::Zero(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RankDeficient);
  }
}

TEST(Region, InterceptsAndMembership) {
  const FeasibleRegion r = gradient_ff_region(2.0, 1.0, 0.9);
  EXPECT_NEAR(r.nu_intercept(), 0.9, 1e-15);
  EXPECT_NEAR(r.rho_intercept_feedthrough(), 1 / 0.9, 1e-15);
  EXPECT_NEAR(r.rho_cap(), 2.0 / (2.0 * 0.9 + 1.0), 1e-15);
  EXPECT_NEAR(r.rho_max_drift(0.0), r.rho_cap(), 1e-15);
  EXPECT_NEAR(r.rho_max_feedthrough(0.0), 1 / 0.9, 1e-15);
  EXPECT_EQ(r.rho_max(0.9), 0.0);
  EXPECT_TRUE(r.contains(0.0, r.rho_cap() - 1e-6));
  EXPECT_FALSE(r.contains(0.0, r.rho_cap() + 1e-6));
  EXPECT_FALSE(r.contains(0.9 + 1e-6, 0.0));
  EXPECT_TRUE(r.contains(0.0, 0.0));
  EXPECT_THROW((void)gradient_ff_region(0.0, 1.0, 1.0), Error);

  std::ostringstream os;
  write_region_csv(os, r, 0.0, 1.0, 11);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "nu,rho_max_eq16,rho_max_eq18,member");
  int members = 0;
  while (std::getline(is, line)) members += line.back() == '1';
  EXPECT_EQ(members, 9);  // ν = 0, 0.1, …, 0.8
}

TEST(Region, CertifyAgreesInsideAndOutside) {
  const double mu = 2.0, g = 1.0, j = 0.9;
  const FeasibleRegion r = gradient_ff_region(mu, g, j);
  const CatalogEntry e = catalog_entry("gradient_ff", fixtures::gradient_ff_params(mu, 0.0));
  const auto pairs = sample_pairs(EquilibriumMap(e.system), fixtures::box(2, -3, 3), fixtures::box(2, -2, 2), 500, 13);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const double nu = 0.95 * j * u01(rng);
    const double rho = 0.98 * r.rho_max(nu) * u01(rng);
    ASSERT_TRUE(r.contains(nu, rho));
    EXPECT_TRUE(verify_eid_ct(e.system, SupplyRate::ifp_osp(2, rho, nu), *e.storage, pairs).passed())
        << nu << " " << rho;
  }
  for (int t = 0; t < 20; ++t) {
    const double nu = 1.2 * u01(rng);
    const double rho = std::max(r.rho_max(nu), 0.0) + 1e-3 + 0.5 * u01(rng);
    ASSERT_FALSE(r.contains(nu, rho));
    EXPECT_FALSE(verify_eid_ct(e.system, SupplyRate::ifp_osp(2, rho, nu), *e.storage, pairs).passed())
        << nu << " " << rho;
  }
}

TEST(EmpiricalGain, DisturbanceSetEdgeCases) {
  const System s = catalog_build("dt_gradient", Json{{"n", 1}, {"mu", 1.0}, {"c", 0.0}, {"alpha", 0.5}});
  const IoSample eq = ku_ky(EquilibriumMap(s), Vector::Zero(1));
  DisturbanceOptions none;
  none.gaussian = none.sinusoids = none.power_chains = 0;
  EXPECT_THROW((void)empirical_gain(s, eq, none), Error);
  DisturbanceOptions zero;
  zero.amplitude = 0.0;
  zero.support = 20;
  zero.tail = 40;
  const EmpiricalGain z = empirical_gain(s, eq, zero);
  EXPECT_EQ(z.skipped, 50u);
  EXPECT_EQ(z.gamma, 0.0);
}

TEST(EmpiricalGain, DtGradientBelowBound) {
  for (double alpha : {0.1, 0.5, 1.0}) {
    const System s = catalog_build("dt_gradient", Json{{"n", 2}, {"mu", 1.0}, {"c", 0.0}, {"alpha", alpha}});
    const IoSample eq = ku_ky(EquilibriumMap(s), (Vector(2) << 0.3, -0.2).finished());
    DisturbanceOptions o;
    o.support = 300;
    o.tail = 400;
    o.seed = 3;
    const EmpiricalGain g = empirical_gain(s, eq, o);
    EXPECT_FALSE(g.truncated);
    EXPECT_LE(g.gamma, dt_gradient_gain(1.0, alpha).gamma);
    EXPECT_GT(g.gamma, 0.9);  // DC gain is 1
  }
}

TEST(EmpiricalGain, AhuBelowBound) {
  for (const auto& [params, bound] : {std::pair{fixtures::ahu_params_k0(), 1.0},
                                      std::pair{fixtures::ahu_params_k2(), 0.5}}) {
    const CatalogEntry e = catalog_entry("ahu_saddle", params);
    const IoSampling s = sample_io_relation(EquilibriumMap(e.system), fixtures::box(e.system.n(), -1, 1), 1, 8);
    DisturbanceOptions o;
    o.seed = 5;
    o.jobs = 4;
    const EmpiricalGain g = empirical_gain(e.system, s.samples.front(), o);
    EXPECT_LE(g.gamma, bound * 1.01);
    EXPECT_GT(g.gamma, 0.5 * bound);
    o.jobs = 1;
    EXPECT_EQ(empirical_gain(e.system, s.samples.front(), o).ratios, g.ratios);
  }
}

}  // namespace
}  // namespace eid
