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

#include "eidlab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace eid {
namespace {

std::size_t step_count(double T, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::DomainError, "dt must be positive");
  if (!(T > 0.0)) throw Error(Errc::DomainError, "horizon must be positive");
  return static_cast<std::size_t>(std::llround(T / dt));
}

Vector check_input(const System& sys, Vector u) {
  if (u.size() != sys.m()) throw Error(Errc::DimensionMismatch, "input has wrong size");
  return u;
}

double radical_inverse(std::size_t i, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

}  // namespace

Trajectory simulate_ct(const System& sys, const Vector& x0, const std::vector<Vector>& u,
                       double dt) {
  if (!sys.continuous()) throw Error(Errc::DomainError, "simulate_ct needs a continuous system");
  if (!(dt > 0.0)) throw Error(Errc::DomainError, "dt must be positive");
  if (x0.size() != sys.n()) throw Error(Errc::DimensionMismatch, "x0 has wrong size");
  const InputField f = [&sys](const Vector& x, const Vector& v) { return sys.step(x, v); };
  Trajectory tr;
  tr.continuous = true;
  tr.dt = dt;
  const std::size_t N = u.size();
  tr.times.reserve(N + 1);
  tr.states.reserve(N + 1);
  tr.times.push_back(0.0);
  tr.states.push_back(require_finite(x0, "initial state"));
  for (std::size_t k = 0; k < N; ++k) {
    const Vector uk = check_input(sys, u[k]);
    const Vector& x = tr.states.back();
    const Vector x1 = rk4_step(f, x, uk, dt);
    // Cubic Hermite midpoint from the endpoint derivatives.
    const Vector xm = 0.5 * (x + x1) + (dt / 8.0) * (f(x, uk) - f(x1, uk));
    tr.inputs.push_back(uk);
    tr.outputs.push_back(sys.output(x, uk));
    tr.outputs_mid.push_back(sys.output(xm, uk));
    tr.outputs_end.push_back(sys.output(x1, uk));
    tr.states.push_back(x1);
    tr.times.push_back(static_cast<double>(k + 1) * dt);
  }
  return tr;
}

Trajectory simulate_ct(const System& sys, const Vector& x0, const TimeSignal& u, double T,
                       double dt) {
  const std::size_t N = step_count(T, dt);
  std::vector<Vector> seq;
  seq.reserve(N);
  for (std::size_t k = 0; k < N; ++k) seq.push_back(u(static_cast<double>(k) * dt));
  return simulate_ct(sys, x0, seq, dt);
}

Trajectory simulate_dt(const System& sys, const Vector& x0, const std::vector<Vector>& u) {
  if (sys.continuous()) throw Error(Errc::DomainError, "simulate_dt needs a discrete system");
  if (u.empty()) throw Error(Errc::DomainError, "need at least one step");
  if (x0.size() != sys.n()) throw Error(Errc::DimensionMismatch, "x0 has wrong size");
  Trajectory tr;
  tr.continuous = false;
  tr.dt = 1.0;
  tr.times.push_back(0.0);
  tr.states.push_back(require_finite(x0, "initial state"));
  for (std::size_t k = 0; k < u.size(); ++k) {
    const Vector uk = check_input(sys, u[k]);
    const Vector& x = tr.states.back();
    tr.inputs.push_back(uk);
    tr.outputs.push_back(sys.output(x, uk));
    tr.states.push_back(require_finite(sys.step(x, uk), "state"));
    tr.times.push_back(static_cast<double>(k + 1));
  }
  return tr;
}

Trajectory simulate_dt(const System& sys, const Vector& x0, const StepSignal& u,
                       std::size_t steps) {
  std::vector<Vector> seq;
  seq.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) seq.push_back(u(k));
  return simulate_dt(sys, x0, seq);
}

Trajectory append_outputs(Trajectory traj, const VectorField& extra) {
  auto widen = [&](std::vector<Vector>& ys) {
    for (Vector& y : ys) {
      const Vector e = extra(y);
      Vector out(y.size() + e.size());
      out << y, e;
      y = std::move(out);
    }
  };
  widen(traj.outputs);
  widen(traj.outputs_mid);
  widen(traj.outputs_end);
  return traj;
}

double default_audit_tol(const Trajectory& traj) {
  if (!traj.continuous) return 1e-9;
  const double T = traj.dt * static_cast<double>(traj.steps());
  return 1e-6 + 10.0 * std::pow(traj.dt, 4) * T;
}

DissipationAudit audit_dissipation(const Trajectory& traj, const StorageFamily& storage,
                                   const IoSample& eq, const SupplyRate& w,
                                   std::optional<double> tol) {
  DissipationAudit a;
  a.tol = tol.value_or(default_audit_tol(traj));
  const std::size_t N = traj.steps();
  a.storage.reserve(N + 1);
  for (const Vector& x : traj.states) a.storage.push_back(storage.value(x, eq.x));
  a.supply_integral.assign(1, 0.0);
  for (std::size_t k = 0; k < N; ++k) {
    const Vector du = traj.inputs[k] - eq.u;
    double supplied = w(du, traj.outputs[k] - eq.y);
    if (traj.continuous) {
      supplied = traj.dt / 6.0 *
                 (supplied + 4.0 * w(du, traj.outputs_mid[k] - eq.y) +
                  w(du, traj.outputs_end[k] - eq.y));
    }
    a.supply_integral.push_back(a.supply_integral.back() + supplied);
    const double v = (a.storage[k + 1] - a.storage[k]) - supplied;
    a.violation.push_back(v);
    if (k == 0 || v > a.max_step_violation) {
      a.max_step_violation = v;
      a.worst_step = k;
    }
    a.max_abs_gap = std::max(a.max_abs_gap, std::abs(v));
    a.max_cumulative_violation = std::max(
        a.max_cumulative_violation, a.storage[k + 1] - a.storage[0] - a.supply_integral.back());
  }
  if (N == 0) a.max_step_violation = 0.0;
  a.max_violation = std::max(a.max_step_violation, a.max_cumulative_violation);
  a.verdict = a.max_violation <= a.tol ? Verdict::Pass : Verdict::Fail;
  return a;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const DissipationAudit* audit) {
  const Eigen::Index n = traj.states.front().size();
  const Eigen::Index m = traj.inputs.empty() ? 0 : traj.inputs.front().size();
  const Eigen::Index p = traj.outputs.empty() ? 0 : traj.outputs.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i;
  for (Eigen::Index i = 0; i < m; ++i) os << ",u" << i;
  for (Eigen::Index i = 0; i < p; ++i) os << ",y" << i;
  if (audit) os << ",V,supply,violation";
  os << '\n';
  os.precision(17);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const bool last = k == traj.steps();
    os << traj.times[k];
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << traj.states[k](i);
    for (Eigen::Index i = 0; i < m; ++i) {
      os << ',';
      if (!last) os << traj.inputs[k](i);
    }
    // Final output uses the last held input in continuous time.
    for (Eigen::Index i = 0; i < p; ++i) {
      os << ',';
      if (!last) os << traj.outputs[k](i);
      else if (traj.continuous && k > 0) os << traj.outputs_end[k - 1](i);
    }
    if (audit) {
      os << ',' << audit->storage[k] << ',' << audit->supply_integral[k] << ',';
      if (!last) os << audit->violation[k];
    }
    os << '\n';
  }
}

std::vector<Vector> probe_shell(Eigen::Index n, std::size_t count, double radius) {
  if (n < 1) throw Error(Errc::DomainError, "probe shell needs n >= 1");
  std::vector<Vector> out;
  out.reserve(count);
  constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  for (std::size_t i = 0; i < count; ++i) {
    Vector d(n);
    if (n == 1) {
      d(0) = i % 2 == 0 ? 1.0 : -1.0;
    } else if (n == 2) {
      const double a = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(count);
      d << std::cos(a), std::sin(a);
    } else {
      // Box-Muller on Halton pairs, then normalise.
      for (Eigen::Index j = 0; j < n; j += 2) {
        const std::size_t dim = static_cast<std::size_t>(j);
        const double u1 = std::max(radical_inverse(i + 1, kPrimes[dim % 16]), 1e-12);
        const double u2 = radical_inverse(i + 1, kPrimes[(dim + 1) % 16]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        d(j) = r * std::cos(2.0 * M_PI * u2);
        if (j + 1 < n) d(j + 1) = r * std::sin(2.0 * M_PI * u2);
      }
      if (d.norm() == 0.0) d(0) = 1.0;
      d.normalize();
    }
    out.push_back(radius * d);
  }
  return out;
}

StabilityReport stability_experiment(const System& sys, const Vector& xbar, const Vector& ubar,
                                     const StabilityOptions& opts) {
  const std::vector<Vector> shell = probe_shell(sys.n(), opts.probes, opts.radius);
  StabilityReport r;
  r.final_distances.assign(shell.size(), INFINITY);
  parallel_for(shell.size(), opts.jobs, [&](std::size_t i) {
    try {
      const Vector x0 = xbar + shell[i];
      Vector xf;
      if (sys.continuous()) {
        const std::size_t N = step_count(opts.horizon, opts.dt);
        xf = simulate_ct(sys, x0, std::vector<Vector>(N, ubar), opts.dt).states.back();
      } else {
        const auto N = static_cast<std::size_t>(std::llround(opts.horizon));
        xf = simulate_dt(sys, x0, std::vector<Vector>(N, ubar)).states.back();
      }
      const double d = (xf - xbar).norm();
      r.final_distances[i] = std::isfinite(d) ? d : INFINITY;
    } catch (const Error& e) {
      if (e.code() != Errc::NonFinite) throw;
    }
  });
  std::size_t ok = 0;
  for (double d : r.final_distances) {
    r.converged.push_back(d <= opts.converge_tol);
    ok += d <= opts.converge_tol ? 1 : 0;
    r.max_final_distance = std::max(r.max_final_distance, d);
  }
  r.converged_fraction =
      shell.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(shell.size());
  return r;
}

Json to_json(const DissipationAudit& a) {
  return {{"max_violation", a.max_violation},
          {"max_step_violation", a.max_step_violation},
          {"max_cumulative_violation", a.max_cumulative_violation},
          {"worst_step", a.worst_step},
          {"max_abs_gap", a.max_abs_gap},     {"tol", a.tol},
          {"steps", a.violation.size()},      {"verdict", verdict_name(a.verdict)}};
}

Json to_json(const StabilityReport& r) {
  Json d = Json::array();
  for (double v : r.final_distances) d.push_back(std::isfinite(v) ? Json(v) : Json(nullptr));
  return {{"probes", r.final_distances.size()},
          {"converged_fraction", r.converged_fraction},
          {"max_final_distance", std::isfinite(r.max_final_distance) ? Json(r.max_final_distance) : Json(nullptr)},
          {"final_distances", d}};
}

}  // namespace eid
