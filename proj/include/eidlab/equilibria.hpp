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
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "eidlab/systems.hpp"

namespace eid {

inline constexpr double kEquilibriumTol = 1e-8;

/// Orthonormal rows spanning the left null space of G. Returns a 0×n matrix
/// when G is square; callers test rows() == 0 for the fully actuated case.
[[nodiscard]] Matrix annihilator(const Matrix& G);

/// Forced-equilibrium maps k_u, k_y for a fixed system.
class EquilibriumMap {
 public:
  explicit EquilibriumMap(System sys);

  [[nodiscard]] const System& system() const { return sys_; }
  [[nodiscard]] const Matrix& G_perp() const { return G_perp_; }
  [[nodiscard]] bool fully_actuated() const { return G_perp_.rows() == 0; }

  /// G⊥f(x) in continuous time, G⊥(x − f(x)) in discrete time.
  [[nodiscard]] Vector residual(const Vector& x) const;
  [[nodiscard]] Vector ku(const Vector& x) const;
  [[nodiscard]] Vector ky(const Vector& x) const { return sys_.output(x, ku(x)); }
  /// f(x) + Gu in continuous time, f(x) + Gu − x in discrete time.
  [[nodiscard]] Vector equilibrium_error(const Vector& x, const Vector& u) const;

 private:
  System sys_;
  Matrix G_perp_;
  Matrix G_left_inverse_;  // (GᵀG)⁻¹Gᵀ
};

struct IoSample {
  Vector x;
  Vector u;
  Vector y;
};

/// Throws NotAssignable when x̄ is not on the equilibrium manifold within tol.
[[nodiscard]] IoSample ku_ky(const EquilibriumMap& emap, const Vector& xbar,
                             double tol = kEquilibriumTol);

[[nodiscard]] Vector solve_equilibrium(const EquilibriumMap& emap, const Vector& ubar,
                                       const Vector& x0, double tol = 1e-10,
                                       int max_iter = 100);

struct Box {
  Vector lo;
  Vector hi;
};

struct IoSampling {
  std::vector<IoSample> samples;
  std::size_t requested = 0;
  std::size_t projection_failures = 0;
};

/// Uniform candidates in the box. Underactuated systems are projected onto
/// the equilibrium manifold with minimum-norm Newton steps.
[[nodiscard]] IoSampling sample_io_relation(const EquilibriumMap& emap, const Box& region,
                                            std::size_t count, std::uint64_t seed,
                                            int jobs = 1);

struct RelationReport {
  std::size_t samples = 0;
  std::size_t pairs = 0;
  double min_value = INFINITY;
  double tol = 0.0;
  std::vector<double> values;  // row-major over pairs i < j
  std::vector<std::pair<std::size_t, std::size_t>> violations;

  [[nodiscard]] bool dissipative() const { return violations.empty(); }
};

/// Evaluates w(ū − ũ, ȳ − ỹ) on every sample pair; violations are values below −tol.
[[nodiscard]] RelationReport check_relation_dissipativity(const std::vector<IoSample>& samples,
                                                          const SupplyRate& w,
                                                          double tol = 1e-10);

struct MaximalityReport {
  std::optional<bool> cocoercive_sampled;
  double rho = 0.0;
  double cocoercive_min = INFINITY;
  bool homeomorphism_hint = false;  // Jacobian nonsingular at every sample
  std::size_t jacobian_probes = 0;
  bool zero_or_identity = false;  // zero drift (continuous), identity (discrete)
};

/// Needs a square system. Cocoercivity is tested only when rho > 0 and at
/// least two samples are given.
[[nodiscard]] MaximalityReport maximality_conditions(const System& sys,
                                                     const std::vector<IoSample>& samples,
                                                     double rho = 0.0);

/// Columns xbar_1..xbar_n, ubar_1..ubar_m, ybar_1..ybar_p.
void write_io_csv(std::ostream& out, const std::vector<IoSample>& samples);

}  // namespace eid
