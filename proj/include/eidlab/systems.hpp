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

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eidlab/numerics.hpp"

namespace eid {

enum class TimeDomain { Continuous, Discrete };

/// Structural tag on the drift, used where a property holds exactly for the
/// zero map (continuous time) or the identity map (discrete time).
enum class DriftKind { General, Zero, Identity };

/// Control-affine system, ẋ = f(x) + Gu or x⁺ = f(x) + Gu, y = h(x) + Ju.
class System {
 public:
  struct Parts {
    TimeDomain domain = TimeDomain::Continuous;
    VectorField f;
    VectorField h;
    Matrix G;
    Matrix J;
    JacobianField f_jacobian;  // optional
    JacobianField h_jacobian;  // optional
    DriftKind drift = DriftKind::General;
    std::string family = "custom";
  };

  /// Deferred skips the rank(G) = m check so validate_system can report it.
  enum class Validation { Strict, Deferred };

  explicit System(Parts parts, Validation validation = Validation::Strict);

  [[nodiscard]] Eigen::Index n() const { return parts_.G.rows(); }
  [[nodiscard]] Eigen::Index m() const { return parts_.G.cols(); }
  [[nodiscard]] Eigen::Index p() const { return parts_.J.rows(); }
  [[nodiscard]] TimeDomain domain() const { return parts_.domain; }
  [[nodiscard]] bool continuous() const { return parts_.domain == TimeDomain::Continuous; }
  [[nodiscard]] const Matrix& G() const { return parts_.G; }
  [[nodiscard]] const Matrix& J() const { return parts_.J; }
  [[nodiscard]] DriftKind drift_kind() const { return parts_.drift; }
  [[nodiscard]] const std::string& family() const { return parts_.family; }
  [[nodiscard]] const Parts& parts() const { return parts_; }

  [[nodiscard]] Vector f(const Vector& x) const { return parts_.f(x); }
  [[nodiscard]] Vector h(const Vector& x) const { return parts_.h(x); }
  /// f(x) + Gu
  [[nodiscard]] Vector step(const Vector& x, const Vector& u) const {
    return parts_.f(x) + parts_.G * u;
  }
  /// h(x) + Ju
  [[nodiscard]] Vector output(const Vector& x, const Vector& u) const {
    return parts_.h(x) + parts_.J * u;
  }

  [[nodiscard]] bool has_f_jacobian() const { return static_cast<bool>(parts_.f_jacobian); }
  [[nodiscard]] Matrix f_jacobian(const Vector& x) const;
  [[nodiscard]] Matrix h_jacobian(const Vector& x) const;

 private:
  Parts parts_;
};

/// Quadratic supply w(u, y) = [y; u]ᵀ [[Q, S], [Sᵀ, R]] [y; u].
class SupplyRate {
 public:
  SupplyRate(Matrix Q, Matrix S, Matrix R);

  [[nodiscard]] const Matrix& Q() const { return Q_; }
  [[nodiscard]] const Matrix& S() const { return S_; }
  [[nodiscard]] const Matrix& R() const { return R_; }
  [[nodiscard]] Eigen::Index p() const { return Q_.rows(); }
  [[nodiscard]] Eigen::Index m() const { return R_.rows(); }

  [[nodiscard]] double operator()(const Vector& u, const Vector& y) const;
  [[nodiscard]] Matrix block() const;
  /// R + JᵀS + SᵀJ + JᵀQJ
  [[nodiscard]] Matrix rhat(const Matrix& J) const;
  /// True unless the block matrix is PSD or NSD. Definite supplies are legal
  /// but usually a configuration mistake, so callers may warn.
  [[nodiscard]] bool sign_indefinite() const;

  static SupplyRate passivity(Eigen::Index m);
  static SupplyRate l2_gain(Eigen::Index p, Eigen::Index m, double gamma);
  /// Q = −a I, S = ½ I, R = −ν I.
  static SupplyRate ifp_osp(Eigen::Index m, double a, double nu);
  static SupplyRate cocoercive(Eigen::Index m, double rho) { return ifp_osp(m, rho, 0.0); }
  static SupplyRate strongly_monotone(Eigen::Index m, double mu) { return ifp_osp(m, 0.0, mu); }
  /// (−I, (K1+K2)/2, −K1K2)
  static SupplyRate sector(const Matrix& K1, const Matrix& K2);

 private:
  Matrix Q_, S_, R_;
};

enum class Convexity { Convex, StrictlyConvex, StronglyConvex };

struct StorageGenerator {
  std::function<double(const Vector&)> V;
  VectorField grad;
  Convexity convexity = Convexity::Convex;
  double mu = 0.0;  // modulus when StronglyConvex

  /// V(x) = ½ xᵀPx
  static StorageGenerator quadratic(const Matrix& P);
};

struct GeneratorCheck {
  bool gradient_ok = true;
  double max_gradient_error = 0.0;  // relative
  bool convexity_ok = true;
  double min_secant_ratio = INFINITY;  // min [∇V(x)−∇V(z)]ᵀ(x−z)/‖x−z‖²
  std::size_t probes = 0;
};

/// Sampled gradient-consistency and secant checks in the box [lo, hi].
[[nodiscard]] GeneratorCheck check_generator(const StorageGenerator& gen, const Vector& lo,
                                             const Vector& hi, std::uint64_t seed,
                                             std::size_t pairs = 1000);

/// φ(x) = Σ (μ_i/2) x_i² + c_i log cosh x_i. Strongly convex with modulus
/// min μ_i and gradient Lipschitz constant max(μ_i + c_i) when c ≥ 0.
struct SeparablePotential {
  Vector mu;
  Vector c;

  [[nodiscard]] double value(const Vector& x) const;
  [[nodiscard]] Vector grad(const Vector& x) const;
  [[nodiscard]] Vector hess_diag(const Vector& x) const;
  [[nodiscard]] double strong_convexity() const;
  [[nodiscard]] double lipschitz() const;
  [[nodiscard]] StorageGenerator generator() const;
};

[[nodiscard]] double log_cosh(double z);

/// Incremental sector [K1, K2] with diagonal K1, K2 and K = K2 − K1 ≻ 0.
class SectorBounds {
 public:
  SectorBounds(Matrix K1, Matrix K2);
  [[nodiscard]] const Matrix& K1() const { return K1_; }
  [[nodiscard]] const Matrix& K2() const { return K2_; }
  [[nodiscard]] Matrix K() const { return K2_ - K1_; }
  [[nodiscard]] Eigen::Index m() const { return K1_.rows(); }

 private:
  Matrix K1_, K2_;
};

struct StaticNonlinearity {
  VectorField psi;
  std::optional<SectorBounds> sector;

  [[nodiscard]] Vector operator()(const Vector& z) const { return psi(z); }

  static StaticNonlinearity linear(const Matrix& K);
  /// ψ_i(z) = lower·z + (upper − lower)·clamp(z, −limit, limit), which lies in
  /// the incremental sector [lower, upper].
  static StaticNonlinearity saturation(Eigen::Index m, double lower, double upper,
                                       double limit = 1.0);
};

struct SystemValidation {
  bool rank_ok = true;
  bool finite_ok = true;
  bool jacobian_ok = true;
  bool dimensions_ok = true;
  double max_jacobian_error = 0.0;
  std::vector<std::string> messages;

  [[nodiscard]] bool ok() const { return rank_ok && finite_ok && jacobian_ok && dimensions_ok; }
};

/// Probes f and h in [−scale, scale]ⁿ.
[[nodiscard]] SystemValidation validate_system(const System& sys, std::uint64_t seed = 0,
                                               std::size_t probes = 32, double scale = 2.0);

}  // namespace eid
