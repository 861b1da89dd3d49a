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

#include "eidlab/gains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "eidlab/sim.hpp"

namespace eid {

const char* formula_name(GainFormula f) {
  switch (f) {
    case GainFormula::IfpOsp: return "ifp_osp";
    case GainFormula::Ahu: return "ahu";
    case GainFormula::DtGradient: return "dt_gradient";
    case GainFormula::Empirical: return "empirical";
  }
  return "?";
}

GainBound ifp_osp_gain(double a, double b) {
  if (!(a > 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw Error(Errc::DomainError, "ifp_osp_gain needs a > 0 and b >= 0");
  const double r = std::sqrt(4.0 * a * b + 1.0);
  const double g2 = (a * b + (1.0 + r) / 4.0) / (1.0 - 1.0 / (1.0 + r)) / (a * a);
  return {std::sqrt(g2), GainFormula::IfpOsp, {{"a", a}, {"b", b}, {"delta_star", (r + 1.0) / (2.0 * a)}}};
}

GainBound dt_gradient_gain(double mu, double alpha) {
  if (!(mu > 0.0) || !(alpha > 0.0) || !std::isfinite(mu) || !std::isfinite(alpha))
    throw Error(Errc::DomainError, "dt_gradient_gain needs mu > 0 and alpha > 0");
  const double r = std::sqrt(2.0 * mu * alpha + 1.0);
  const double g2 = (mu * alpha / 2.0 + (1.0 + r) / 4.0) / (1.0 - 1.0 / (1.0 + r)) / (mu * mu);
  return {std::sqrt(g2), GainFormula::DtGradient, {{"mu", mu}, {"alpha", alpha}}};
}

GainBound ahu_gain(const Matrix& M, const Matrix& A, const Matrix& K,
                   std::optional<double> gamma) {
  const Eigen::Index n = M.rows();
  if (M.cols() != n || A.cols() != n || K.rows() != A.rows() || K.cols() != A.rows())
    throw Error(Errc::DimensionMismatch, "ahu_gain needs M n×n, A r×n, K r×r");
  if (!M.isDiagonal(0.0) || !(M.diagonal().minCoeff() > 0.0))
    throw Error(Errc::DomainError, "M must be diagonal positive");
  require_symmetric(K, "K");
  if (!is_psd(K)) throw Error(Errc::DomainError, "K must be PSD");
  if (numerical_rank(A) != static_cast<std::size_t>(A.rows()))
    throw Error(Errc::RankDeficient, "A must have full row rank");
  const double lmin = min_eigenvalue(M + A.transpose() * K * A);
  const double gstar = 1.0 / lmin;
  const double g = gamma.value_or(gstar);
  if (g < gstar * (1.0 - 1e-12))
    throw Error(Errc::DomainError, "gamma below the certified bound");
  return {g, GainFormula::Ahu,
          {{"lambda_min", lmin}, {"gamma_star", gstar}, {"alpha", 2.0 * g * g * lmin}}};
}

FeasibleRegion::FeasibleRegion(double mu, double g, double j) : mu_(mu), g_(g), j_(j) {
  if (!(mu > 0.0) || !(g > 0.0) || !(j > 0.0))
    throw Error(Errc::DomainError, "region needs mu, g, j > 0");
}

double FeasibleRegion::rho_max_feedthrough(double nu) const { return (j_ - nu) / (j_ * j_); }

double FeasibleRegion::rho_max_drift(double nu) const {
  const double d = j_ - nu;
  const double den = g_ * g_ * d + mu_ * j_ * j_;
  if (!(den > 0.0)) return -std::numeric_limits<double>::infinity();
  return mu_ * d / den;
}

double FeasibleRegion::rho_max(double nu) const {
  return std::min(rho_max_feedthrough(nu), rho_max_drift(nu));
}

bool FeasibleRegion::contains(double nu, double rho) const {
  return j_ - rho * j_ * j_ > nu && rho <= rho_max_drift(nu);
}

FeasibleRegion gradient_ff_region(double mu, double g, double j) { return {mu, g, j}; }

void write_region_csv(std::ostream& os, const FeasibleRegion& region, double nu_lo,
                      double nu_hi, int count) {
  if (count < 2 || !(nu_hi > nu_lo)) throw Error(Errc::DomainError, "bad nu sweep");
  os << "nu,rho_max_eq16,rho_max_eq18,member\n";
  os.precision(17);
  for (int i = 0; i < count; ++i) {
    const double nu = nu_lo + (nu_hi - nu_lo) * i / (count - 1);
    os << nu << ',' << region.rho_max_feedthrough(nu) << ',' << region.rho_max_drift(nu) << ','
       << (region.contains(nu, 0.0) ? 1 : 0) << '\n';
  }
}

namespace {

using Signal = std::vector<Vector>;

struct RunResult {
  double ratio = std::numeric_limits<double>::quiet_NaN();
  bool truncated = false;
  Signal deviation;  // y − ȳ over the support window
};

class GainRunner {
 public:
  GainRunner(const System& sys, const IoSample& eq, const DisturbanceOptions& o)
      : sys_(sys), eq_(eq), o_(o) {
    const double step = sys.continuous() ? o.dt : 1.0;
    if (!(step > 0.0) || !(o.support > 0.0) || !(o.tail >= 0.0))
      throw Error(Errc::DomainError, "disturbance window must be positive");
    support_ = static_cast<std::size_t>(std::llround(o.support / step));
    total_ = support_ + static_cast<std::size_t>(std::llround(o.tail / step));
    if (support_ == 0) throw Error(Errc::DomainError, "disturbance window has no steps");
  }

  [[nodiscard]] std::size_t support() const { return support_; }

  RunResult run(const Signal& v) const {
    RunResult r;
    const double step = sys_.continuous() ? o_.dt : 1.0;
    double in = 0.0;
    for (const Vector& vk : v) in += vk.squaredNorm() * step;
    if (in == 0.0) return r;
    std::vector<Vector> u(total_, eq_.u);
    for (std::size_t k = 0; k < support_; ++k) u[k] += v[k];
    const Trajectory tr = sys_.continuous() ? simulate_ct(sys_, eq_.x, u, o_.dt)
                                            : simulate_dt(sys_, eq_.x, u);
    double out = 0.0;
    for (std::size_t k = 0; k < total_; ++k) {
      const double e0 = (tr.outputs[k] - eq_.y).squaredNorm();
      if (sys_.continuous()) {
        out += o_.dt / 6.0 *
               (e0 + 4.0 * (tr.outputs_mid[k] - eq_.y).squaredNorm() +
                (tr.outputs_end[k] - eq_.y).squaredNorm());
      } else {
        out += e0;
      }
      if (k < support_) r.deviation.push_back(tr.outputs[k] - eq_.y);
    }
    r.ratio = std::sqrt(out / in);
    r.truncated = (tr.states.back() - eq_.x).squaredNorm() > 1e-6 * in;
    return r;
  }

 private:
  const System& sys_;
  const IoSample& eq_;
  const DisturbanceOptions& o_;
  std::size_t support_ = 0, total_ = 0;
};

Signal gaussian_signal(std::mt19937_64& rng, Eigen::Index m, std::size_t len, double amp) {
  // Piecewise-constant Gaussian levels with random hold lengths.
  std::uniform_int_distribution<std::size_t> hold(1, std::max<std::size_t>(1, len / 8));
  Signal s;
  s.reserve(len);
  while (s.size() < len) {
    const Vector level = amp * standard_normal(rng, m);
    for (std::size_t h = hold(rng); h > 0 && s.size() < len; --h) s.push_back(level);
  }
  return s;
}

Signal sinusoid_signal(std::mt19937_64& rng, Eigen::Index m, std::size_t len, double step,
                       double amp) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Vector dir = standard_normal(rng, m);
  if (dir.norm() == 0.0) dir(0) = 1.0;
  dir.normalize();
  // Frequencies up to a quarter of the Nyquist rate, biased towards DC.
  const double w = std::pow(u01(rng), 2) * M_PI / (4.0 * step);
  const double phase = 2.0 * M_PI * u01(rng);
  Signal s;
  s.reserve(len);
  for (std::size_t k = 0; k < len; ++k)
    s.push_back(amp * std::sin(w * static_cast<double>(k) * step + phase) * dir);
  return s;
}

}  // namespace

EmpiricalGain empirical_gain(const System& sys, const IoSample& eq,
                             const DisturbanceOptions& opts) {
  const std::size_t count = opts.gaussian + opts.sinusoids + opts.power_chains;
  if (count == 0) throw Error(Errc::DomainError, "empty disturbance set");
  if (opts.power_chains > 0 && sys.m() != sys.p())
    throw Error(Errc::NonSquare, "power iteration needs m = p");
  const GainRunner runner(sys, eq, opts);
  const std::size_t len = runner.support();
  const Eigen::Index m = sys.m();
  const double step = sys.continuous() ? opts.dt : 1.0;

  // Seeds drawn up front so results do not depend on the thread count.
  std::mt19937_64 master(opts.seed);
  std::vector<std::uint64_t> seeds(count);
  for (auto& s : seeds) s = master();

  EmpiricalGain g;
  g.ratios.assign(count, std::numeric_limits<double>::quiet_NaN());
  std::vector<char> trunc(count, 0);
  parallel_for(count, opts.jobs, [&](std::size_t i) {
    std::mt19937_64 rng(seeds[i]);
    if (i < opts.gaussian) {
      const RunResult r = runner.run(gaussian_signal(rng, m, len, opts.amplitude));
      g.ratios[i] = r.ratio;
      trunc[i] = r.truncated;
    } else if (i < opts.gaussian + opts.sinusoids) {
      const RunResult r = runner.run(sinusoid_signal(rng, m, len, step, opts.amplitude));
      g.ratios[i] = r.ratio;
      trunc[i] = r.truncated;
    } else {
      // Time-reversed output as the next input: the adjoint for systems with
      // symmetric impulse response, a heuristic otherwise.
      Signal v = gaussian_signal(rng, m, len, opts.amplitude);
      double best = std::numeric_limits<double>::quiet_NaN();
      for (int it = 0; it < std::max(1, opts.power_steps); ++it) {
        const RunResult r = runner.run(v);
        if (std::isnan(r.ratio)) break;
        if (std::isnan(best) || r.ratio > best) {
          best = r.ratio;
          trunc[i] = r.truncated;
        }
        double energy = 0.0;
        for (const Vector& e : r.deviation) energy += e.squaredNorm();
        if (energy == 0.0) break;
        double scale = 0.0;
        for (const Vector& vk : v) scale += vk.squaredNorm();
        scale = std::sqrt(scale / energy);
        Signal next(r.deviation.rbegin(), r.deviation.rend());
        for (Vector& vk : next) vk *= scale;
        v = std::move(next);
      }
      g.ratios[i] = best;
    }
  });
  bool any = false;
  for (std::size_t i = 0; i < count; ++i) {
    if (std::isnan(g.ratios[i])) {
      ++g.skipped;
      continue;
    }
    g.truncated = g.truncated || trunc[i];
    if (!any || g.ratios[i] > g.gamma) {
      g.gamma = g.ratios[i];
      g.worst = i;
    }
    any = true;
  }
  return g;
}

Json to_json(const GainBound& g) {
  Json params = Json::object();
  for (const auto& [k, v] : g.parameters) params[k] = v;
  return {{"gamma", g.gamma}, {"formula", formula_name(g.formula)}, {"parameters", params}};
}

Json to_json(const EmpiricalGain& g) {
  Json ratios = Json::array();
  for (double r : g.ratios) ratios.push_back(std::isnan(r) ? Json(nullptr) : Json(r));
  return {{"gamma", g.gamma}, {"formula", "empirical"}, {"worst", g.worst},
          {"skipped", g.skipped}, {"truncated", g.truncated}, {"ratios", ratios}};
}

}  // namespace eid
