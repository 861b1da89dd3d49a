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
#include <iosfwd>
#include <vector>

#include "eidlab/certify.hpp"
#include "eidlab/systems.hpp"

namespace eid {

/// States x_0..x_N, inputs u_0..u_{N−1} (held over each step in continuous
/// time) and outputs y_k = h(x_k) + J u_k. Continuous runs also keep the
/// output at the Hermite midpoint and at the end of each step, both with u_k.
struct Trajectory {
  bool continuous = true;
  double dt = 1.0;  // 1 in discrete time
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  std::vector<Vector> outputs;
  std::vector<Vector> outputs_mid;
  std::vector<Vector> outputs_end;

  [[nodiscard]] std::size_t steps() const { return inputs.size(); }
};

using TimeSignal = std::function<Vector(double t)>;
using StepSignal = std::function<Vector(std::size_t k)>;

/// RK4 with zero-order hold, N = round(T/dt) steps. Throws NonFinite.
[[nodiscard]] Trajectory simulate_ct(const System& sys, const Vector& x0, const TimeSignal& u,
                                     double T, double dt);
[[nodiscard]] Trajectory simulate_ct(const System& sys, const Vector& x0,
                                     const std::vector<Vector>& u, double dt);

[[nodiscard]] Trajectory simulate_dt(const System& sys, const Vector& x0, const StepSignal& u,
                                     std::size_t steps);
[[nodiscard]] Trajectory simulate_dt(const System& sys, const Vector& x0,
                                     const std::vector<Vector>& u);

/// Copy with extra(y) appended to every output sample.
[[nodiscard]] Trajectory append_outputs(Trajectory traj, const VectorField& extra);

/// Default audit tolerance: 1e-6 + 10·dt⁴·T in continuous time, 1e-9 in
/// discrete time.
[[nodiscard]] double default_audit_tol(const Trajectory& traj);

struct DissipationAudit {
  std::vector<double> storage;         // V_x̄(x_k)
  std::vector<double> supply_integral; // cumulative ∫w or Σw
  std::vector<double> violation;       // per step: ΔV − ∫w over the step
  double max_step_violation = -INFINITY;
  std::size_t worst_step = 0;
  double max_cumulative_violation = 0.0;  // max over k of V_k − V_0 − ∫₀ w
  double max_violation = 0.0;             // larger of the two above
  double max_abs_gap = 0.0;  // max |ΔV − ∫w|
  double tol = 0.0;
  Verdict verdict = Verdict::Fail;
  [[nodiscard]] bool passed() const { return verdict == Verdict::Pass; }
};

/// Compares storage increments with the supplied energy w(u − ū, y − ȳ),
/// both per step and from the start. Continuous time integrates the supply
/// with Simpson's rule.
[[nodiscard]] DissipationAudit audit_dissipation(const Trajectory& traj,
                                                 const StorageFamily& storage,
                                                 const IoSample& eq, const SupplyRate& w,
                                                 std::optional<double> tol = std::nullopt);

/// Columns t, x…, u…, y…, V, supply, violation. Inputs and violations are
/// blank on the final row.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const DissipationAudit* audit = nullptr);

/// Points on the sphere of the given radius: an even circle for n = 2, Halton
/// directions for n ≥ 3, ±radius for n = 1.
[[nodiscard]] std::vector<Vector> probe_shell(Eigen::Index n, std::size_t count, double radius);

struct StabilityOptions {
  std::size_t probes = 32;
  double radius = 0.1;
  double horizon = 20.0;  // time, or steps in discrete time
  double dt = 1e-2;
  double converge_tol = 1e-4;
  int jobs = 1;
};

struct StabilityReport {
  std::vector<double> final_distances;  // +inf when the run blew up
  std::vector<bool> converged;
  double converged_fraction = 0.0;
  double max_final_distance = 0.0;
  [[nodiscard]] bool all_converged() const { return converged_fraction == 1.0; }
};

/// Runs from x̄ + shell points with u = ū held constant.
[[nodiscard]] StabilityReport stability_experiment(const System& sys, const Vector& xbar,
                                                   const Vector& ubar,
                                                   const StabilityOptions& opts = {});

[[nodiscard]] Json to_json(const DissipationAudit& a);
[[nodiscard]] Json to_json(const StabilityReport& r);

}  // namespace eid
