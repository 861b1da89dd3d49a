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

#include "eidlab/numerics.hpp"
#include "oracles.hpp"

namespace eid {
namespace {

TEST(SymEigen, IdentityAndDiagonal) {
  EXPECT_TRUE(sym_eigen(Matrix::Identity(2, 2)).values.isApprox(Vector::Ones(2)));
  Matrix D(2, 2);
  D << 3, 0, 0, -1;
  const EigenResult e = sym_eigen(D);
  EXPECT_DOUBLE_EQ(e.values(0), -1.0);
  EXPECT_DOUBLE_EQ(e.values(1), 3.0);
}

TEST(SymEigen, TwoByTwoCharacteristicPolynomial) {
  Matrix A(2, 2);
  A << 2, 1, 1, 2;
  const EigenResult e = sym_eigen(A);
  EXPECT_NEAR(e.values(0), 1.0, 1e-14);
  EXPECT_NEAR(e.values(1), 3.0, 1e-14);
}

TEST(SymEigen, RejectsAsymmetric) {
  Matrix A(2, 2);
  A << 1, 2, 0, 1;
  EXPECT_THROW((void)sym_eigen(A), Error);
  try {
    (void)sym_eigen(A);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonSymmetric);
  }
}

TEST(SymEigen, RandomReconstructionAndCrossCheck) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    Matrix B(5, 5);
    for (int i = 0; i < 25; ++i) B(i / 5, i % 5) = nd(rng);
    const Matrix A = B + B.transpose();
    const EigenResult e = sym_eigen(A);
    const Matrix recon = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    EXPECT_LE((A - recon).norm(), 1e-9 * A.norm());
    EXPECT_LE((A * e.vectors - e.vectors * e.values.asDiagonal()).norm(), 1e-9 * A.norm());
    for (int i = 0; i + 1 < 5; ++i) EXPECT_LE(e.values(i), e.values(i + 1));
    const Eigen::SelfAdjointEigenSolver<Matrix> ref(A);
    EXPECT_LE((ref.eigenvalues() - e.values).norm(), 1e-10 * A.norm());
  }
}

TEST(PsdCheck, Examples) {
  EXPECT_EQ(psd_check(Matrix::Zero(2, 2), 1e-9), Definiteness::PSD);
  EXPECT_TRUE(is_nsd(Matrix::Zero(2, 2), 1e-9));
  Matrix A(2, 2);
  A << 1, 0, 0, -1;
  EXPECT_EQ(psd_check(A), Definiteness::Indefinite);
  EXPECT_EQ(psd_check(-Matrix::Identity(3, 3)), Definiteness::ND);
  EXPECT_EQ(psd_check(Matrix::Identity(3, 3)), Definiteness::PD);
  Matrix N(2, 2);
  N << -1, 0, 0, 0;
  EXPECT_EQ(psd_check(N), Definiteness::NSD);
}

TEST(PsdCheck, AgreesWithQuadraticFormOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mag(0.3, 2.0);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix Qo = oracle::random_orthogonal(3, rng);
    Vector lam(3);
    for (int i = 0; i < 3; ++i) lam(i) = (coin(rng) ? 1.0 : -1.0) * mag(rng);
    const Matrix A = Qo * lam.asDiagonal() * Qo.transpose();
    const Matrix As = 0.5 * (A + A.transpose());
    const auto sign = oracle::quadratic_form_sign(As, 1000, rng);
    const Definiteness d = psd_check(As);
    switch (sign) {
      case oracle::Sign::Positive: EXPECT_EQ(d, Definiteness::PD); break;
      case oracle::Sign::Negative: EXPECT_EQ(d, Definiteness::ND); break;
      case oracle::Sign::Mixed: EXPECT_EQ(d, Definiteness::Indefinite); break;
    }
  }
}

TEST(PsdSqrt, SquaresBack) {
  Matrix A(2, 2);
  A << 2, 1, 1, 2;
  const Matrix W = psd_sqrt(A);
  EXPECT_LE((W * W - A).norm(), 1e-13);
  EXPECT_THROW((void)psd_sqrt(-Matrix::Identity(2, 2)), Error);
}

TEST(NewtonRoot, Examples) {
  const Vector x0 = Vector::Constant(1, 0.5);
  EXPECT_NEAR(newton_root([](const Vector& x) { return x; }, x0, 1e-12, 20)(0), 0.0, 1e-12);

  const double sqrt2 = oracle::bisection([](double x) { return x * x - 2.0; }, 1.0, 2.0);
  const Vector r = newton_root([](const Vector& x) -> Vector { return x.array().square() - 2.0; },
                               Vector::Constant(1, 1.0), 1e-12, 50);
  EXPECT_NEAR(r(0), sqrt2, 1e-11);

  const double asin_half = oracle::bisection([](double x) { return std::sin(x) - 0.5; }, 0.0, 1.0);
  const Vector s = newton_root([](const Vector& x) -> Vector { return x.array().sin() - 0.5; },
                               Vector::Constant(1, 0.4), 1e-12, 50);
  EXPECT_NEAR(s(0), asin_half, 1e-11);
  EXPECT_NEAR(s(0), 0.5235987755982988, 1e-11);
}

TEST(NewtonRoot, Errors) {
  try {
    (void)newton_root([](const Vector& x) -> Vector { return x.array().square() + 1.0; },
                      Vector::Constant(1, 1.0), 1e-12, 30);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == Errc::NoConvergence || e.code() == Errc::SingularJacobian);
  }
  try {
    (void)newton_root(
        [](const Vector& x) -> Vector {
          return (Vector(2) << x(0) + x(1) - 1.0, 2 * x(0) + 2 * x(1) - 3.0).finished();
        },
        Vector::Zero(2), 1e-12, 30);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingularJacobian);
  }
}

TEST(NewtonProject, LandsOnManifold) {
  // Unit circle in R².
  const VectorField F = [](const Vector& x) -> Vector {
    return Vector::Constant(1, x.squaredNorm() - 1.0);
  };
  const Vector x = newton_project(F, (Vector(2) << 2.0, 0.5).finished());
  EXPECT_NEAR(x.norm(), 1.0, 1e-10);
}

TEST(Rk4, Examples) {
  const InputField zero = [](const Vector& x, const Vector&) { return Vector(Vector::Zero(x.size())); };
  const Vector x = (Vector(2) << 1.5, -2.0).finished();
  EXPECT_EQ(rk4_step(zero, x, Vector::Zero(1), 0.1), x);

  const InputField decay = [](const Vector& x, const Vector&) -> Vector { return -x; };
  const double err = std::abs(rk4_step(decay, Vector::Ones(1), Vector::Zero(1), 0.1)(0) -
                              std::exp(-0.1));
  EXPECT_LE(err, 1e-7);  // h⁵/120 ≈ 8.3e-8

  const InputField integ = [](const Vector&, const Vector& u) -> Vector { return u; };
  EXPECT_EQ(rk4_step(integ, Vector::Zero(1), Vector::Constant(1, 2.0), 0.5)(0), 1.0);
  EXPECT_THROW((void)rk4_step(integ, Vector::Zero(1), Vector::Zero(1), 0.0), Error);
}

TEST(Rk4, ObservedOrder) {
  const InputField decay = [](const Vector& x, const Vector&) -> Vector { return -x; };
  auto global_error = [&](int steps) {
    Vector x = Vector::Ones(1);
    for (int i = 0; i < steps; ++i) x = rk4_step(decay, x, Vector::Zero(1), 1.0 / steps);
    return std::abs(x(0) - std::exp(-1.0));
  };
  const double order = std::log2(global_error(10) / global_error(20));
  EXPECT_GE(order, 3.8);
}

TEST(GoldenSection, Quadratic) {
  EXPECT_NEAR(golden_section_min([](double x) { return (x - 2.0) * (x - 2.0); }, 0.0, 5.0), 2.0,
              1e-6);
}

TEST(ParallelFor, MatchesSerial) {
  std::vector<double> a(1000), b(1000);
  parallel_for(a.size(), 1, [&](std::size_t i) { a[i] = std::sin(double(i)); });
  parallel_for(b.size(), 4, [&](std::size_t i) { b[i] = std::sin(double(i)); });
  EXPECT_EQ(a, b);
}

TEST(FiniteDifference, JacobianOfLinearMap) {
  Matrix A(2, 2);
  A << 1, 2, 3, 4;
  const Matrix Jm = jacobian_fd([&](const Vector& x) -> Vector { return A * x; }, Vector::Ones(2));
  EXPECT_LE((Jm - A).norm(), 1e-8);
}

}  // namespace
}  // namespace eid
