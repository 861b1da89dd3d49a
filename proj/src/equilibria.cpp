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

#include "eidlab/equilibria.hpp"

#include <cmath>
#include <ostream>
#include <random>

namespace eid {

Matrix annihilator(const Matrix& G) {
  const Eigen::Index n = G.rows(), m = G.cols();
  if (numerical_rank(G, 1e-10) != static_cast<std::size_t>(m))
    throw Error(Errc::RankDeficient, "annihilator needs rank(G) = m");
  if (m == n) return Matrix(0, n);
  const Matrix Q = Eigen::HouseholderQR<Matrix>(G).householderQ();
  Matrix Gp = Q.rightCols(n - m).transpose();
  for (Eigen::Index r = 0; r < Gp.rows(); ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      if (std::abs(Gp(r, c)) > 1e-12) {
        if (Gp(r, c) < 0.0) Gp.row(r) *= -1.0;
        break;
      }
    }
    // Exact zeros read better in reports than ±1e-17.
    for (Eigen::Index c = 0; c < n; ++c)
      if (std::abs(Gp(r, c)) < 1e-15) Gp(r, c) = 0.0;
  }
  return Gp;
}

EquilibriumMap::EquilibriumMap(System sys)
    : sys_(std::move(sys)), G_perp_(annihilator(sys_.G())) {
  const Matrix& G = sys_.G();
  G_left_inverse_ = (G.transpose() * G).ldlt().solve(G.transpose());
}

Vector EquilibriumMap::residual(const Vector& x) const {
  if (sys_.continuous()) return G_perp_ * sys_.f(x);
  return G_perp_ * (x - sys_.f(x));
}

Vector EquilibriumMap::ku(const Vector& x) const {
  if (sys_.continuous()) return -G_left_inverse_ * sys_.f(x);
  return G_left_inverse_ * (x - sys_.f(x));
}

Vector EquilibriumMap::equilibrium_error(const Vector& x, const Vector& u) const {
  Vector e = sys_.step(x, u);
  if (!sys_.continuous()) e -= x;
  return e;
}

IoSample ku_ky(const EquilibriumMap& emap, const Vector& xbar, double tol) {
  if (xbar.size() != emap.system().n())
    throw Error(Errc::DimensionMismatch, "state has wrong size");
  const double r = emap.fully_actuated() ? 0.0 : emap.residual(xbar).norm();
  if (!(r <= tol))
    throw Error(Errc::NotAssignable, "equilibrium residual " + std::to_string(r));
  IoSample s{xbar, emap.ku(xbar), Vector()};
  s.y = emap.system().output(xbar, s.u);
  return s;
}

Vector solve_equilibrium(const EquilibriumMap& emap, const Vector& ubar, const Vector& x0,
                         double tol, int max_iter) {
  const System& sys = emap.system();
  if (ubar.size() != sys.m() || x0.size() != sys.n())
    throw Error(Errc::DimensionMismatch, "solve_equilibrium dimensions");
  NewtonOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  if (sys.has_f_jacobian()) {
    const bool ct = sys.continuous();
    opts.jacobian = [&sys, ct](const Vector& x) -> Matrix {
      Matrix Jf = sys.f_jacobian(x);
      if (!ct) Jf -= Matrix::Identity(x.size(), x.size());
      return Jf;
    };
  }
  return newton_root([&](const Vector& x) { return emap.equilibrium_error(x, ubar); }, x0, opts);
}

IoSampling sample_io_relation(const EquilibriumMap& emap, const Box& region, std::size_t count,
                              std::uint64_t seed, int jobs) {
  const Eigen::Index n = emap.system().n();
  if (region.lo.size() != n || region.hi.size() != n)
    throw Error(Errc::DimensionMismatch, "sampling box must match the state dimension");
  std::mt19937_64 rng(seed);
  std::vector<Vector> candidates;
  candidates.reserve(count);
  for (std::size_t i = 0; i < count; ++i) candidates.push_back(uniform_in_box(rng, region.lo, region.hi));

  std::vector<std::optional<IoSample>> slots(count);
  parallel_for(count, jobs, [&](std::size_t i) {
    try {
      Vector x = candidates[i];
      if (!emap.fully_actuated()) {
        NewtonOptions opts;
        opts.tol = 1e-12;
        opts.max_iter = 60;
        x = newton_project([&](const Vector& z) { return emap.residual(z); }, x, opts);
      }
      slots[i] = ku_ky(emap, x);
    } catch (const Error&) {
      slots[i].reset();
    }
  });

  IoSampling out;
  out.requested = count;
  for (auto& s : slots) {
    if (s) out.samples.push_back(std::move(*s));
    else ++out.projection_failures;
  }
  return out;
}

RelationReport check_relation_dissipativity(const std::vector<IoSample>& samples,
                                            const SupplyRate& w, double tol) {
  if (samples.size() < 2) throw Error(Errc::DomainError, "need at least two samples");
  RelationReport rep;
  rep.samples = samples.size();
  rep.tol = tol;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const double v = w(samples[i].u - samples[j].u, samples[i].y - samples[j].y);
      rep.values.push_back(v);
      rep.min_value = std::min(rep.min_value, v);
      if (v < -tol) rep.violations.emplace_back(i, j);
    }
  }
  rep.pairs = rep.values.size();
  return rep;
}

MaximalityReport maximality_conditions(const System& sys, const std::vector<IoSample>& samples,
                                       double rho) {
  if (sys.m() != sys.p()) throw Error(Errc::NonSquare, "maximality needs m = p");
  MaximalityReport rep;
  rep.rho = rho;
  if (rho > 0.0 && samples.size() >= 2) {
    const RelationReport r =
        check_relation_dissipativity(samples, SupplyRate::cocoercive(sys.m(), rho));
    rep.cocoercive_min = r.min_value;
    rep.cocoercive_sampled = r.dissipative();
  }
  rep.homeomorphism_hint = !samples.empty();
  for (const IoSample& s : samples) {
    Matrix Jf = sys.f_jacobian(s.x);
    if (!sys.continuous()) Jf -= Matrix::Identity(sys.n(), sys.n());
    const Vector sv = singular_values(Jf);
    ++rep.jacobian_probes;
    if (sv(sv.size() - 1) <= 1e-10 * std::max(1.0, sv(0))) rep.homeomorphism_hint = false;
  }
  rep.zero_or_identity = sys.continuous() ? sys.drift_kind() == DriftKind::Zero
                                          : sys.drift_kind() == DriftKind::Identity;
  return rep;
}

void write_io_csv(std::ostream& out, const std::vector<IoSample>& samples) {
  if (samples.empty()) return;
  const auto& s0 = samples.front();
  std::string sep;
  for (Eigen::Index i = 0; i < s0.x.size(); ++i) out << sep << "xbar_" << i + 1, sep = ",";
  for (Eigen::Index i = 0; i < s0.u.size(); ++i) out << ",ubar_" << i + 1;
  for (Eigen::Index i = 0; i < s0.y.size(); ++i) out << ",ybar_" << i + 1;
  out << '\n';
  out.precision(17);
  for (const auto& s : samples) {
    sep.clear();
    for (Eigen::Index i = 0; i < s.x.size(); ++i) out << sep << s.x(i), sep = ",";
    for (Eigen::Index i = 0; i < s.u.size(); ++i) out << ',' << s.u(i);
    for (Eigen::Index i = 0; i < s.y.size(); ++i) out << ',' << s.y(i);
    out << '\n';
  }
}

}  // namespace eid
