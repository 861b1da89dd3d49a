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

#include "eidlab/systems.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace eid {

System::System(Parts parts, Validation validation) : parts_(std::move(parts)) {
  if (!parts_.f || !parts_.h) throw Error(Errc::DimensionMismatch, "system needs f and h");
  require_finite(parts_.G, "G");
  require_finite(parts_.J, "J");
  const Eigen::Index n = parts_.G.rows(), m = parts_.G.cols(), p = parts_.J.rows();
  if (n == 0 || m == 0 || p == 0) throw Error(Errc::DimensionMismatch, "empty G or J");
  if (parts_.J.cols() != m)
    throw Error(Errc::DimensionMismatch, "J must have as many columns as G");
  if (m > n || p > n) throw Error(Errc::DimensionMismatch, "need m, p <= n");
  const Vector zero = Vector::Zero(n);
  if (parts_.f(zero).size() != n) throw Error(Errc::DimensionMismatch, "f(x) must have size n");
  if (parts_.h(zero).size() != p) throw Error(Errc::DimensionMismatch, "h(x) must have size p");
  if (validation == Validation::Strict &&
      numerical_rank(parts_.G, 1e-10) != static_cast<std::size_t>(m))
    throw Error(Errc::RankDeficient, "rank(G) < m");
}

Matrix System::f_jacobian(const Vector& x) const {
  if (parts_.f_jacobian) return parts_.f_jacobian(x);
  return jacobian_fd(parts_.f, x);
}

Matrix System::h_jacobian(const Vector& x) const {
  if (parts_.h_jacobian) return parts_.h_jacobian(x);
  return jacobian_fd(parts_.h, x);
}

SupplyRate::SupplyRate(Matrix Q, Matrix S, Matrix R)
    : Q_(std::move(Q)), S_(std::move(S)), R_(std::move(R)) {
  require_symmetric(Q_, "supply Q");
  require_symmetric(R_, "supply R");
  require_finite(S_, "supply S");
  if (S_.rows() != Q_.rows() || S_.cols() != R_.rows())
    throw Error(Errc::DimensionMismatch, "supply S must be p x m");
  Q_ = 0.5 * (Q_ + Q_.transpose()).eval();
  R_ = 0.5 * (R_ + R_.transpose()).eval();
}

double SupplyRate::operator()(const Vector& u, const Vector& y) const {
  return y.dot(Q_ * y) + 2.0 * y.dot(S_ * u) + u.dot(R_ * u);
}

Matrix SupplyRate::block() const {
  const Eigen::Index p = Q_.rows(), m = R_.rows();
  Matrix B(p + m, p + m);
  B << Q_, S_, S_.transpose(), R_;
  return B;
}

Matrix SupplyRate::rhat(const Matrix& J) const {
  if (J.rows() != p() || J.cols() != m())
    throw Error(Errc::DimensionMismatch, "feedthrough does not match supply");
  Matrix Rh = R_ + J.transpose() * S_ + S_.transpose() * J + J.transpose() * Q_ * J;
  return 0.5 * (Rh + Rh.transpose());
}

bool SupplyRate::sign_indefinite() const {
  const Matrix B = block();
  return !is_psd(B, 1e-12) && !is_nsd(B, 1e-12);
}

SupplyRate SupplyRate::passivity(Eigen::Index m) {
  return {Matrix::Zero(m, m), 0.5 * Matrix::Identity(m, m), Matrix::Zero(m, m)};
}

SupplyRate SupplyRate::l2_gain(Eigen::Index p, Eigen::Index m, double gamma) {
  return {-Matrix::Identity(p, p), Matrix::Zero(p, m), gamma * gamma * Matrix::Identity(m, m)};
}

SupplyRate SupplyRate::ifp_osp(Eigen::Index m, double a, double nu) {
  return {-a * Matrix::Identity(m, m), 0.5 * Matrix::Identity(m, m),
          -nu * Matrix::Identity(m, m)};
}

SupplyRate SupplyRate::sector(const Matrix& K1, const Matrix& K2) {
  const Eigen::Index m = K1.rows();
  return {-Matrix::Identity(m, m), 0.5 * (K1 + K2), -0.5 * (K1 * K2 + K2 * K1)};
}

StorageGenerator StorageGenerator::quadratic(const Matrix& P) {
  require_symmetric(P, "storage P", 1e-10);
  const Matrix Ps = 0.5 * (P + P.transpose());
  StorageGenerator g;
  g.V = [Ps](const Vector& x) { return 0.5 * x.dot(Ps * x); };
  g.grad = [Ps](const Vector& x) -> Vector { return Ps * x; };
  const double lmin = min_eigenvalue(Ps);
  if (lmin > 0.0) {
    g.convexity = Convexity::StronglyConvex;
    g.mu = lmin;
  }
  return g;
}

GeneratorCheck check_generator(const StorageGenerator& gen, const Vector& lo, const Vector& hi,
                               std::uint64_t seed, std::size_t pairs) {
  GeneratorCheck out;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < pairs; ++i) {
    const Vector x = uniform_in_box(rng, lo, hi);
    const Vector z = uniform_in_box(rng, lo, hi);
    const Vector g = gen.grad(x);
    const double gerr = (gradient_fd(gen.V, x) - g).norm() / std::max(1.0, g.norm());
    out.max_gradient_error = std::max(out.max_gradient_error, gerr);
    const double d2 = (x - z).squaredNorm();
    if (d2 > 1e-20)
      out.min_secant_ratio =
          std::min(out.min_secant_ratio, (g - gen.grad(z)).dot(x - z) / d2);
  }
  out.probes = pairs;
  out.gradient_ok = out.max_gradient_error <= 1e-5;
  const double floor = gen.convexity == Convexity::StronglyConvex ? gen.mu : 0.0;
  out.convexity_ok = out.min_secant_ratio >= floor - 1e-9 * std::max(1.0, floor);
  return out;
}

double log_cosh(double z) {
  const double a = std::abs(z);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

double SeparablePotential::value(const Vector& x) const {
  double v = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    v += 0.5 * mu(i) * x(i) * x(i) + c(i) * log_cosh(x(i));
  return v;
}

Vector SeparablePotential::grad(const Vector& x) const {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) g(i) = mu(i) * x(i) + c(i) * std::tanh(x(i));
  return g;
}

Vector SeparablePotential::hess_diag(const Vector& x) const {
  Vector d(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double t = std::tanh(x(i));
    d(i) = mu(i) + c(i) * (1.0 - t * t);
  }
  return d;
}

double SeparablePotential::strong_convexity() const {
  double m = INFINITY;
  for (Eigen::Index i = 0; i < mu.size(); ++i) m = std::min(m, mu(i) + std::min(c(i), 0.0));
  return m;
}

double SeparablePotential::lipschitz() const {
  double L = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) L = std::max(L, mu(i) + std::max(c(i), 0.0));
  return L;
}

StorageGenerator SeparablePotential::generator() const {
  const SeparablePotential self = *this;
  StorageGenerator g;
  g.V = [self](const Vector& x) { return self.value(x); };
  g.grad = [self](const Vector& x) { return self.grad(x); };
  g.mu = strong_convexity();
  g.convexity = g.mu > 0.0 ? Convexity::StronglyConvex : Convexity::Convex;
  return g;
}

namespace {

bool is_diagonal(const Matrix& A) {
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      if (i != j && A(i, j) != 0.0) return false;
  return true;
}

}  // namespace

SectorBounds::SectorBounds(Matrix K1, Matrix K2) : K1_(std::move(K1)), K2_(std::move(K2)) {
  require_finite(K1_, "K1");
  require_finite(K2_, "K2");
  if (K1_.rows() != K1_.cols() || K2_.rows() != K2_.cols() || K1_.rows() != K2_.rows() ||
      K1_.rows() == 0)
    throw Error(Errc::DimensionMismatch, "sector bounds must be square of equal size");
  if (!is_diagonal(K1_) || !is_diagonal(K2_))
    throw Error(Errc::DomainError, "sector bounds must be diagonal");
  for (Eigen::Index i = 0; i < K1_.rows(); ++i)
    if (!(K2_(i, i) - K1_(i, i) > 0.0))
      throw Error(Errc::DomainError, "sector requires K2 - K1 > 0");
}

StaticNonlinearity StaticNonlinearity::linear(const Matrix& K) {
  StaticNonlinearity s;
  s.psi = [K](const Vector& z) -> Vector { return K * z; };
  return s;
}

StaticNonlinearity StaticNonlinearity::saturation(Eigen::Index m, double lower, double upper,
                                                  double limit) {
  StaticNonlinearity s;
  s.psi = [lower, upper, limit](const Vector& z) -> Vector {
    Vector out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      out(i) = lower * z(i) + (upper - lower) * std::clamp(z(i), -limit, limit);
    return out;
  };
  s.sector = SectorBounds(lower * Matrix::Identity(m, m), upper * Matrix::Identity(m, m));
  return s;
}

SystemValidation validate_system(const System& sys, std::uint64_t seed, std::size_t probes,
                                 double scale) {
  SystemValidation rep;
  const Eigen::Index n = sys.n();
  if (numerical_rank(sys.G(), 1e-10) != static_cast<std::size_t>(sys.m())) {
    rep.rank_ok = false;
    rep.messages.push_back("rank(G) < m");
  }
  if (sys.m() > n || sys.p() > n) {
    rep.dimensions_ok = false;
    rep.messages.push_back("m or p exceeds n");
  }
  std::mt19937_64 rng(seed);
  const Vector lo = Vector::Constant(n, -scale), hi = Vector::Constant(n, scale);
  const auto& parts = sys.parts();
  for (std::size_t i = 0; i < probes; ++i) {
    const Vector x = uniform_in_box(rng, lo, hi);
    const Vector fx = sys.f(x), hx = sys.h(x);
    if (!fx.allFinite() || !hx.allFinite()) {
      if (rep.finite_ok) rep.messages.push_back("non-finite f or h at a probe");
      rep.finite_ok = false;
      continue;
    }
    auto compare = [&](const JacobianField& analytic, const VectorField& F, const char* name) {
      if (!analytic) return;
      const Matrix A = analytic(x), N = jacobian_fd(F, x);
      const double err = (A - N).norm() / std::max(1.0, N.norm());
      rep.max_jacobian_error = std::max(rep.max_jacobian_error, err);
      if (err > 1e-5 && rep.jacobian_ok) {
        rep.jacobian_ok = false;
        rep.messages.push_back(std::string(name) + " Jacobian disagrees with finite differences");
      }
    };
    compare(parts.f_jacobian, parts.f, "f");
    compare(parts.h_jacobian, parts.h, "h");
  }
  return rep;
}

}  // namespace eid
