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
#include <optional>
#include <vector>

#include "eidlab/certify.hpp"
#include "eidlab/systems.hpp"

namespace eid {

/// Negative feedback u1 = v1 − y2, u2 = v2 + y1.
struct FeedbackLoop {
  System sigma1;
  System sigma2;
};

inline constexpr double kMaxLoopCondition = 1e8;

/// Condition number of I + J2 J1. Throws DimensionMismatch or IllPosed.
double check_well_posed(const FeedbackLoop& loop);

/// Stacked state (x1, x2), inputs (v1, v2), outputs (y1, y2).
[[nodiscard]] System compose_closed_loop(const FeedbackLoop& loop);

/// Supply certified by V1 + κ V2 for the loop above.
struct ComposedSupply {
  Matrix Q, S, R;
  double kappa = 1.0;
  [[nodiscard]] SupplyRate rate() const { return {Q, S, R}; }
};

[[nodiscard]] ComposedSupply compose_supply(const SupplyRate& w1, const SupplyRate& w2,
                                            double kappa);

struct KappaSearch {
  double kappa = 0.0;
  double lambda_max = INFINITY;  // λ_max(Q_cl) at kappa
  double tol = 0.0;
  Verdict verdict = Verdict::Fail;
  [[nodiscard]] bool passed() const { return verdict == Verdict::Pass; }
};

struct KappaOptions {
  double lo = 1e-4;
  double hi = 1e4;
  int grid = 60;
  double tol = 1e-9;
  int jobs = 1;
};

/// Log grid plus golden-section refinement of κ ↦ λ_max(Q_cl(κ)).
[[nodiscard]] KappaSearch kappa_search(const SupplyRate& w1, const SupplyRate& w2,
                                       const KappaOptions& opts = {});

struct GradientLoopStability {
  double lambda = 0.0;  // convex-combination weight of the two ∇φ supplies
  KappaSearch search;
  [[nodiscard]] bool passed() const { return search.passed(); }
};

/// Step x⁺ = x + αu in feedback with ∇φ, using the supply family
/// (−λ/L, ½, −(1 − λ)μ) for ∇φ. Searches λ on a uniform interior grid.
[[nodiscard]] GradientLoopStability gradient_method_stability(double mu, double L, double alpha,
                                                              int lambda_grid = 99,
                                                              const KappaOptions& opts = {});

/// Σ′: ẋ = f − G K1 h + G u, y = K h + u. Requires m = p and J = 0.
[[nodiscard]] System loop_transform(const System& sys, const SectorBounds& bounds);

/// Plant with a memoryless nonlinearity in negative feedback, u = v − ψ(y).
/// Output stays y; append ψ(y) to a trajectory with append_outputs to audit a
/// composed supply. Requires J = 0.
[[nodiscard]] System close_static_loop(const System& plant, const StaticNonlinearity& psi);

struct CircleOptions {
  int grid = 40;
  double eps_lo = 1e-6;
  double eps_hi = 1.0;
  CertifyOptions certify;
  std::optional<StaticNonlinearity> psi;  // sector declaration checked if given
  std::uint64_t sector_seed = 0;
};

struct CircleReport {
  double epsilon = 0.0;  // largest certified grid value, 0 if none
  Verdict verdict = Verdict::Fail;
  bool sector_ok = true;
  std::vector<double> grid;
  std::vector<bool> certified;
  std::optional<EidCertificate> certificate;  // at epsilon
  [[nodiscard]] bool passed() const { return verdict == Verdict::Pass; }
};

/// Certifies Σ′ against (−εI, ½I, 0). Pairs must lie on the equilibrium set
/// of Σ′, which equals that of Σ.
[[nodiscard]] CircleReport circle_criterion(const System& sys, const SectorBounds& bounds,
                                            const StorageGenerator& gen,
                                            const std::vector<StatePair>& pairs,
                                            const CircleOptions& opts = {});

/// 0 = f(x) − Gψ(h(x)) + Gv for the original loop.
[[nodiscard]] Vector solve_static_loop_equilibrium(const System& plant,
                                                   const StaticNonlinearity& psi,
                                                   const Vector& v, const Vector& x0,
                                                   double tol = 1e-12);

struct TransformedEquilibrium {
  Vector x;
  Vector y_ell;
  Vector psi_prime;  // ψ′(y_ℓ)
};

/// Equilibrium of Σ′ in feedback with ψ′, where ψ′ is defined implicitly by
/// p = ψ(q) − K1 q, q = K⁻¹(y_ℓ + p). Newton on the stacked unknowns.
[[nodiscard]] TransformedEquilibrium solve_transformed_equilibrium(
    const System& plant, const SectorBounds& bounds, const StaticNonlinearity& psi,
    const Vector& x0, double tol = 1e-12);

/// Equilibrium relations of the two blocks as maps. Which pair is needed
/// depends on the condition that holds: R2 + Q1 ≺ 0 uses k1_inverse and k2,
/// R1 + Q2 ≺ 0 uses k1 and k2_inverse.
struct MonotoneMaps {
  VectorField k1;
  VectorField k1_inverse;
  VectorField k2;
  VectorField k2_inverse;
};

struct InclusionOptions {
  double tol = 1e-10;
  int max_iter = 200000;
  double lipschitz_radius = 1.0;
  int lipschitz_samples = 64;
  std::uint64_t seed = 0;
};

struct InclusionSolution {
  Vector y1, y2;
  double residual = 0.0;
  int iterations = 0;
  double modulus = 0.0;   // certified strong monotonicity
  double lipschitz = 0.0; // sampled estimate
  double step = 0.0;
};

/// Unique equilibrium outputs of the loop for constant (v1, v2).
[[nodiscard]] InclusionSolution solve_monotone_inclusion(const MonotoneMaps& maps,
                                                         const Vector& v1, const Vector& v2,
                                                         const SupplyRate& w1,
                                                         const SupplyRate& w2,
                                                         const InclusionOptions& opts = {});

[[nodiscard]] Json to_json(const KappaSearch& k);
[[nodiscard]] Json to_json(const CircleReport& r);

}  // namespace eid
