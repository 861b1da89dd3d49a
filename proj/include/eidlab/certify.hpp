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
#include <string>
#include <utility>
#include <vector>

#include "eidlab/catalog.hpp"
#include "eidlab/equilibria.hpp"
#include "eidlab/systems.hpp"

namespace eid {

/// V_x̄(x) = V(x) − V(x̄) − ∇V(x̄)ᵀ(x − x̄)
[[nodiscard]] double bregman(const StorageGenerator& gen, const Vector& xbar, const Vector& x);

/// A storage function parameterised by the reference state. The audit and
/// the dissipation factorisation accept any family, not only Bregman ones.
struct StorageFamily {
  std::function<double(const Vector& x, const Vector& xbar)> value;
  std::function<Vector(const Vector& x, const Vector& xbar)> grad;  // ∇ₓ V_x̄(x)

  static StorageFamily bregman(const StorageGenerator& gen);
  /// ‖x − x̄‖²_P (no ½), the discrete-time quadratic family.
  static StorageFamily quadratic(const Matrix& P);
  /// V(x) − V(x̄): the classical storage translated to the equilibrium.
  static StorageFamily shifted(const StorageGenerator& gen);
};

struct StatePair {
  Vector x;
  Vector xbar;
};

/// x̄ from the equilibrium manifold inside eq_box, x uniform in state_box.
/// The first pair is always degenerate (x = x̄).
[[nodiscard]] std::vector<StatePair> sample_pairs(const EquilibriumMap& emap,
                                                  const Box& state_box, const Box& eq_box,
                                                  std::size_t count, std::uint64_t seed,
                                                  int jobs = 1);

enum class CheckMode { Equality, Inequality };
enum class Verdict { Pass, Fail };
enum class FailureReason { None, RhatNotPsd, Feedthrough, InputMatching, Drift };

[[nodiscard]] const char* verdict_name(Verdict v);
[[nodiscard]] const char* failure_name(FailureReason r);

struct Tolerances {
  double a = 1e-7;
  double b = 1e-7;
  double c = 1e-10;
};

struct CertifyOptions {
  CheckMode mode = CheckMode::Inequality;
  Tolerances tol;
  std::optional<Matrix> W;  // k×m; PSD square root of the feedthrough block if absent
  PairMap ell;              // minimum-norm least squares per pair if empty
  double equilibrium_tol = kEquilibriumTol;
  int jobs = 1;
  std::uint64_t seed = 0;  // recorded only
};

struct ResidualStats {
  double max_drift_violation = 0.0;  // inequality: max(slack, 0); equality: max |slack|
  double max_drift_slack = -INFINITY;
  double max_input_residual = 0.0;
  double feedthrough_residual = 0.0;
  std::size_t worst_drift_pair = 0;
  std::size_t worst_input_pair = 0;
};

/// Outcome of checking the incremental Hill-Moylan conditions on a pair set.
/// Continuous time uses a Bregman storage; discrete time uses ‖x − x̄‖²_P.
struct EidCertificate {
  bool continuous = true;
  SupplyRate supply;
  Matrix W = Matrix();
  Eigen::Index k = 0;
  std::optional<Matrix> P = std::nullopt;
  Tolerances tol = {};
  CheckMode mode = CheckMode::Inequality;
  Verdict verdict = Verdict::Fail;
  FailureReason reason = FailureReason::None;
  ResidualStats stats = {};
  double feedthrough_min_eig = 0.0;  // λ_min of R̂ (or R̂ − GᵀPG)
  bool ell_least_squares = true;
  std::size_t pair_count = 0;
  std::uint64_t seed = 0;
  std::vector<double> drift_slack = {};     // lhs − rhs per pair
  std::vector<double> input_residual = {};  // ‖·‖ per pair

  [[nodiscard]] bool passed() const { return verdict == Verdict::Pass; }
};
using DtEidCertificate = EidCertificate;

[[nodiscard]] EidCertificate verify_eid_ct(const System& sys, const SupplyRate& w,
                                           const StorageGenerator& gen,
                                           const std::vector<StatePair>& pairs,
                                           const CertifyOptions& opts = {});

[[nodiscard]] DtEidCertificate verify_eid_dt(const System& sys, const SupplyRate& w,
                                             const Matrix& P,
                                             const std::vector<StatePair>& pairs,
                                             const CertifyOptions& opts = {});

[[nodiscard]] Json to_json(const EidCertificate& cert);

struct FactorizationResult {
  double a = 0.0;
  Vector b_diff;
  Matrix rhat_eff;
  Matrix D;  // [[a, b_diffᵀ], [b_diff, rhat_eff]]
  EigenResult eig;
  double margin = 0.0;  // λ_min(D)
  std::size_t rank = 0;
};

/// Dissipation matrix at (x, x̄) for a continuous-time storage family.
[[nodiscard]] FactorizationResult factor_dissipation(const System& sys, const SupplyRate& w,
                                                     const StorageFamily& storage,
                                                     const Vector& x, const Vector& xbar);
[[nodiscard]] FactorizationResult factor_dissipation(const System& sys, const SupplyRate& w,
                                                     const StorageGenerator& gen,
                                                     const Vector& x, const Vector& xbar);
/// Discrete-time version for V_x̄(x) = ‖x − x̄‖²_P.
[[nodiscard]] FactorizationResult factor_dissipation_dt(const System& sys, const SupplyRate& w,
                                                        const Matrix& P, const Vector& x,
                                                        const Vector& xbar);

struct SectorReport {
  std::size_t pairs = 0;
  double min_value = INFINITY;
  double min_normalized = INFINITY;  // value / ‖Δz‖²
  std::size_t violations = 0;
  bool pass = false;
};

using ProbePair = std::pair<Vector, Vector>;

[[nodiscard]] std::vector<ProbePair> sector_probes(Eigen::Index m, std::size_t count,
                                                   double scale, std::uint64_t seed);

/// Incremental sector test with supply (−I, (K1+K2)/2, −K1K2) on z ↦ ψ(z).
[[nodiscard]] SectorReport check_sector(const StaticNonlinearity& psi, const SectorBounds& bounds,
                                        const std::vector<ProbePair>& probes,
                                        double tol = 1e-12);

struct KypReport {
  Matrix M;
  double lambda_max = 0.0;
  bool pass = false;
};

/// M(P) = [[FᵀP + PF, PG], [GᵀP, 0]] − [H J; 0 I]ᵀ [[Q, S], [Sᵀ, R]] [H J; 0 I].
[[nodiscard]] KypReport verify_kyp_lti(const Matrix& F, const Matrix& G, const Matrix& H,
                                       const Matrix& J, const SupplyRate& w, const Matrix& P,
                                       double tol = 1e-9);

struct ObservabilityReport {
  std::size_t samples = 0;
  std::size_t full_rank = 0;
  [[nodiscard]] bool pass() const { return samples > 0 && full_rank == samples; }
};

/// Rank of the linearised observability matrix at each sampled equilibrium.
/// A heuristic stand-in for equilibrium-independent observability.
[[nodiscard]] ObservabilityReport linearized_observability(const System& sys,
                                                           const std::vector<IoSample>& samples);

}  // namespace eid
