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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eidlab/catalog.hpp"
#include "eidlab/equilibria.hpp"
#include "eidlab/systems.hpp"

namespace eid {

enum class GainFormula { IfpOsp, Ahu, DtGradient, Empirical };

[[nodiscard]] const char* formula_name(GainFormula f);

struct GainBound {
  double gamma = 0.0;
  GainFormula formula = GainFormula::IfpOsp;
  std::map<std::string, double> parameters;
};

/// Finite L2 gain implied by the supply (−a, ½, b): γ² = min over δ > 1/(2a)
/// of (b + δ/2)/(a − 1/(2δ)). Records the minimiser as "delta_star".
[[nodiscard]] GainBound ifp_osp_gain(double a, double b);

/// ℓ2 gain bound of the gradient step x⁺ = x − α(∇φ(x) − v), y = x, for
/// μ-strongly convex φ.
[[nodiscard]] GainBound dt_gradient_gain(double mu, double alpha);

/// γ⋆ = 1/λ_min(M + AᵀKA) for the saddle-point flow, with the storage scale
/// α = 2γ²λ_min certifying gain γ (γ⋆ if not given).
[[nodiscard]] GainBound ahu_gain(const Matrix& M, const Matrix& A, const Matrix& K,
                                 std::optional<double> gamma = std::nullopt);

/// OSP/IFP parameters (ν, ρ) certifiable for the gradient system with
/// feedthrough y = g∇φ(x) + j u, φ μ-strongly convex.
class FeasibleRegion {
 public:
  FeasibleRegion(double mu, double g, double j);
  [[nodiscard]] double mu() const { return mu_; }
  [[nodiscard]] double g() const { return g_; }
  [[nodiscard]] double j() const { return j_; }
  /// Supremum of ρ allowed by the feedthrough condition j − ρj² > ν.
  [[nodiscard]] double rho_max_feedthrough(double nu) const;
  /// Largest ρ allowed by the drift condition; −inf where it has no solution.
  [[nodiscard]] double rho_max_drift(double nu) const;
  [[nodiscard]] double rho_max(double nu) const;
  [[nodiscard]] bool contains(double nu, double rho) const;
  [[nodiscard]] double nu_intercept() const { return j_; }
  [[nodiscard]] double rho_intercept_feedthrough() const { return 1.0 / j_; }
  [[nodiscard]] double rho_cap() const { return mu_ / (g_ * g_ + mu_ * j_); }

 private:
  double mu_, g_, j_;
};

[[nodiscard]] FeasibleRegion gradient_ff_region(double mu, double g, double j);

/// Columns nu, rho_max_eq16, rho_max_eq18, member where member says whether
/// (ν, 0) lies in the region.
void write_region_csv(std::ostream& os, const FeasibleRegion& region, double nu_lo,
                      double nu_hi, int count);

struct DisturbanceOptions {
  std::size_t gaussian = 30;
  std::size_t sinusoids = 15;
  std::size_t power_chains = 5;  // each seeded by a Gaussian signal
  int power_steps = 8;
  double support = 20.0;  // disturbance window: time, or steps in discrete time
  double tail = 30.0;     // zero-input continuation after the window
  double dt = 1e-2;       // continuous time only
  double amplitude = 1.0;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct EmpiricalGain {
  double gamma = 0.0;
  std::vector<double> ratios;  // ‖y − ȳ‖ / ‖v‖ per disturbance (NaN when skipped)
  std::size_t worst = 0;
  std::size_t skipped = 0;  // zero-energy disturbances
  bool truncated = false;   // some run ended with ‖x − x̄‖² > 1e-6 ‖v‖²
};

/// Lower estimate of the incremental gain v ↦ y − ȳ from x(0) = x̄ with
/// u = ū + v. Output energy uses Simpson's rule per step in continuous time.
[[nodiscard]] EmpiricalGain empirical_gain(const System& sys, const IoSample& eq,
                                           const DisturbanceOptions& opts = {});

[[nodiscard]] Json to_json(const GainBound& g);
[[nodiscard]] Json to_json(const EmpiricalGain& g);

}  // namespace eid
