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

#include "eidlab/certify.hpp"

#include <cmath>
#include <random>

namespace eid {

double bregman(const StorageGenerator& gen, const Vector& xbar, const Vector& x) {
  return gen.V(x) - gen.V(xbar) - gen.grad(xbar).dot(x - xbar);
}

StorageFamily StorageFamily::bregman(const StorageGenerator& gen) {
  return {[gen](const Vector& x, const Vector& xbar) { return eid::bregman(gen, xbar, x); },
          [gen](const Vector& x, const Vector& xbar) -> Vector {
            return gen.grad(x) - gen.grad(xbar);
          }};
}

StorageFamily StorageFamily::quadratic(const Matrix& P) {
  return {[P](const Vector& x, const Vector& xbar) {
            const Vector d = x - xbar;
            return d.dot(P * d);
          },
          [P](const Vector& x, const Vector& xbar) -> Vector { return 2.0 * P * (x - xbar); }};
}

StorageFamily StorageFamily::shifted(const StorageGenerator& gen) {
  return {[gen](const Vector& x, const Vector& xbar) { return gen.V(x) - gen.V(xbar); },
          [gen](const Vector& x, const Vector&) -> Vector { return gen.grad(x); }};
}

std::vector<StatePair> sample_pairs(const EquilibriumMap& emap, const Box& state_box,
                                    const Box& eq_box, std::size_t count, std::uint64_t seed,
                                    int jobs) {
  if (count == 0) return {};
  const IoSampling eq = sample_io_relation(emap, eq_box, count, seed, jobs);
  if (eq.samples.empty())
    throw Error(Errc::NoConvergence, "no equilibrium could be sampled in the region");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<StatePair> pairs;
  pairs.reserve(count);
  pairs.push_back({eq.samples.front().x, eq.samples.front().x});
  for (std::size_t i = 1; i < count; ++i) {
    const Vector& xbar = eq.samples[i % eq.samples.size()].x;
    pairs.push_back({uniform_in_box(rng, state_box.lo, state_box.hi), xbar});
  }
  return pairs;
}

const char* verdict_name(Verdict v) { return v == Verdict::Pass ? "Pass" : "Fail"; }

const char* failure_name(FailureReason r) {
  switch (r) {
    case FailureReason::None: return "none";
    case FailureReason::RhatNotPsd: return "feedthrough_block_not_psd";
    case FailureReason::Feedthrough: return "feedthrough_condition";
    case FailureReason::InputMatching: return "input_condition";
    case FailureReason::Drift: return "drift_condition";
  }
  return "?";
}

namespace {

struct PairResidual {
  double slack = 0.0;
  double input = 0.0;
};

/// Shared driver: `feed` is R̂ (continuous) or R̂ − GᵀPG (discrete);
/// `pair_terms` returns (lhs of the drift condition, input-matching target t)
/// where the input condition reads Wᵀℓ = t.
template <class PairTerms>
EidCertificate run_certificate(const System& sys, const SupplyRate& w, const Matrix& feed,
                               const std::vector<StatePair>& pairs, const CertifyOptions& opts,
                               PairTerms pair_terms, bool continuous) {
  const Eigen::Index m = sys.m();
  if (w.p() != sys.p() || w.m() != m)
    throw Error(Errc::DimensionMismatch, "supply does not match the system");
  if (pairs.empty()) throw Error(Errc::DomainError, "no sample pairs");

  EidCertificate cert{.continuous = continuous, .supply = w};
  cert.tol = opts.tol;
  cert.mode = opts.mode;
  cert.seed = opts.seed;
  cert.feedthrough_min_eig = min_eigenvalue(feed);

  if (opts.W) {
    if (opts.W->cols() != m) throw Error(Errc::DimensionMismatch, "W must have m columns");
    cert.W = *opts.W;
  } else if (cert.feedthrough_min_eig < -opts.tol.c) {
    cert.W = Matrix::Zero(m, m);
    cert.k = m;
    cert.reason = FailureReason::RhatNotPsd;
    cert.stats.feedthrough_residual = -cert.feedthrough_min_eig;
    return cert;
  } else {
    cert.W = psd_sqrt(feed, opts.tol.c);
  }
  cert.k = cert.W.rows();
  cert.stats.feedthrough_residual = (cert.W.transpose() * cert.W - feed).norm();
  cert.ell_least_squares = !opts.ell;

  const EquilibriumMap emap(sys);
  for (const StatePair& pr : pairs) {
    if (pr.x.size() != sys.n() || pr.xbar.size() != sys.n())
      throw Error(Errc::DimensionMismatch, "pair state size");
    if (!emap.fully_actuated() && !(emap.residual(pr.xbar).norm() <= opts.equilibrium_tol))
      throw Error(Errc::NotAssignable, "pair reference is not an equilibrium");
  }

  const Matrix Wt = cert.W.transpose();
  const Matrix Wt_pinv = Eigen::CompleteOrthogonalDecomposition<Matrix>(Wt).pseudoInverse();
  const Matrix& Q = w.Q();

  std::vector<StatePair> all = pairs;
  all.push_back({pairs.front().xbar, pairs.front().xbar});
  std::vector<PairResidual> res(all.size());
  parallel_for(all.size(), opts.jobs, [&](std::size_t i) {
    const StatePair& pr = all[i];
    const auto [lhs, target] = pair_terms(pr.x, pr.xbar);
    const Vector dh = sys.h(pr.x) - sys.h(pr.xbar);
    const Vector ell = opts.ell ? Vector(opts.ell(pr.x, pr.xbar)) : Vector(Wt_pinv * target);
    if (ell.size() != cert.k) throw Error(Errc::DimensionMismatch, "ell has the wrong size");
    const double rhs = dh.dot(Q * dh) - ell.squaredNorm();
    res[i].slack = lhs - rhs;
    res[i].input = (Wt * ell - target).norm();
  });

  ResidualStats& st = cert.stats;
  cert.drift_slack.reserve(res.size());
  cert.input_residual.reserve(res.size());
  for (std::size_t i = 0; i < res.size(); ++i) {
    const double viol = opts.mode == CheckMode::Equality ? std::abs(res[i].slack)
                                                         : std::max(res[i].slack, 0.0);
    if (i == 0 || viol > st.max_drift_violation) {
      st.max_drift_violation = viol;
      st.worst_drift_pair = i;
    }
    if (i == 0 || res[i].input > st.max_input_residual) {
      st.max_input_residual = res[i].input;
      st.worst_input_pair = i;
    }
    st.max_drift_slack = std::max(st.max_drift_slack, res[i].slack);
    cert.drift_slack.push_back(res[i].slack);
    cert.input_residual.push_back(res[i].input);
  }
  cert.pair_count = res.size();

  if (!(st.feedthrough_residual <= opts.tol.c)) cert.reason = FailureReason::Feedthrough;
  else if (!(st.max_input_residual <= opts.tol.b)) cert.reason = FailureReason::InputMatching;
  else if (!(st.max_drift_violation <= opts.tol.a)) cert.reason = FailureReason::Drift;
  else cert.verdict = Verdict::Pass;
  return cert;
}

}  // namespace

EidCertificate verify_eid_ct(const System& sys, const SupplyRate& w, const StorageGenerator& gen,
                             const std::vector<StatePair>& pairs, const CertifyOptions& opts) {
  if (!sys.continuous()) throw Error(Errc::DomainError, "verify_eid_ct needs a continuous system");
  const Matrix QJS = w.Q() * sys.J() + w.S();
  const Matrix Gt = sys.G().transpose();
  auto terms = [&](const Vector& x, const Vector& xbar) {
    const Vector dgrad = gen.grad(x) - gen.grad(xbar);
    const Vector df = sys.f(x) - sys.f(xbar);
    const Vector dh = sys.h(x) - sys.h(xbar);
    const double lhs = dgrad.dot(df);
    const Vector target = QJS.transpose() * dh - 0.5 * Gt * dgrad;
    return std::pair<double, Vector>(lhs, target);
  };
  return run_certificate(sys, w, w.rhat(sys.J()), pairs, opts, terms, true);
}

DtEidCertificate verify_eid_dt(const System& sys, const SupplyRate& w, const Matrix& P,
                               const std::vector<StatePair>& pairs, const CertifyOptions& opts) {
  if (sys.continuous()) throw Error(Errc::DomainError, "verify_eid_dt needs a discrete system");
  if (P.rows() != sys.n() || P.cols() != sys.n())
    throw Error(Errc::DimensionMismatch, "P must be n x n");
  require_symmetric(P, "P", 1e-10);
  if (!is_psd(P)) throw Error(Errc::DomainError, "P must be PSD");
  const Matrix QJS = w.Q() * sys.J() + w.S();
  const Matrix GtP = sys.G().transpose() * P;
  auto terms = [&](const Vector& x, const Vector& xbar) {
    const Vector df = sys.f(x) - sys.f(xbar);
    const Vector dx = x - xbar;
    const Vector dh = sys.h(x) - sys.h(xbar);
    const double lhs = df.dot(P * df) - dx.dot(P * dx);
    const Vector target = QJS.transpose() * dh - GtP * df;
    return std::pair<double, Vector>(lhs, target);
  };
  const Matrix feed = w.rhat(sys.J()) - GtP * sys.G();
  EidCertificate cert =
      run_certificate(sys, w, 0.5 * (feed + feed.transpose()), pairs, opts, terms, false);
  cert.P = P;
  return cert;
}

Json to_json(const EidCertificate& cert) {
  Json j;
  j["time_domain"] = cert.continuous ? "continuous" : "discrete";
  j["supply"] = {{"Q", matrix_to_json(cert.supply.Q())},
                 {"S", matrix_to_json(cert.supply.S())},
                 {"R", matrix_to_json(cert.supply.R())}};
  j["W"] = matrix_to_json(cert.W);
  j["k"] = cert.k;
  if (cert.P) j["P"] = matrix_to_json(*cert.P);
  j["tolerances"] = {{"drift", cert.tol.a}, {"input", cert.tol.b}, {"feedthrough", cert.tol.c}};
  j["mode"] = cert.mode == CheckMode::Equality ? "equality" : "inequality";
  j["ell"] = cert.ell_least_squares ? "least_squares" : "supplied";
  j["verdict"] = verdict_name(cert.verdict);
  j["failure"] = failure_name(cert.reason);
  j["residuals"] = {{"max_drift_violation", cert.stats.max_drift_violation},
                    {"max_drift_slack", cert.stats.max_drift_slack},
                    {"max_input_residual", cert.stats.max_input_residual},
                    {"feedthrough_residual", cert.stats.feedthrough_residual},
                    {"worst_drift_pair", cert.stats.worst_drift_pair},
                    {"worst_input_pair", cert.stats.worst_input_pair}};
  j["feedthrough_min_eig"] = cert.feedthrough_min_eig;
  j["pairs"] = cert.pair_count;
  j["seed"] = cert.seed;
  return j;
}

namespace {

FactorizationResult assemble(double a, const Vector& b, const Matrix& feed) {
  const Eigen::Index m = b.size();
  FactorizationResult out;
  out.a = a;
  out.b_diff = b;
  out.rhat_eff = feed;
  out.D.resize(m + 1, m + 1);
  out.D(0, 0) = a;
  out.D.block(1, 0, m, 1) = b;
  out.D.block(0, 1, 1, m) = b.transpose();
  out.D.bottomRightCorner(m, m) = feed;
  out.eig = sym_eigen(out.D);
  out.margin = out.eig.values(0);
  const double scale = std::max(1.0, out.D.norm());
  for (Eigen::Index i = 0; i < out.eig.values.size(); ++i)
    if (out.eig.values(i) > 1e-10 * scale) ++out.rank;
  return out;
}

}  // namespace

FactorizationResult factor_dissipation(const System& sys, const SupplyRate& w,
                                       const StorageFamily& storage, const Vector& x,
                                       const Vector& xbar) {
  if (!sys.continuous()) throw Error(Errc::DomainError, "use factor_dissipation_dt");
  const EquilibriumMap emap(sys);
  const Vector ubar = emap.ku(xbar);
  const Vector g = storage.grad(x, xbar);
  const Vector dh = sys.h(x) - sys.h(xbar);
  const double a = dh.dot(w.Q() * dh) - g.dot(sys.step(x, ubar));
  const Vector b = (w.Q() * sys.J() + w.S()).transpose() * dh - 0.5 * sys.G().transpose() * g;
  return assemble(a, b, w.rhat(sys.J()));
}

FactorizationResult factor_dissipation(const System& sys, const SupplyRate& w,
                                       const StorageGenerator& gen, const Vector& x,
                                       const Vector& xbar) {
  return factor_dissipation(sys, w, StorageFamily::bregman(gen), x, xbar);
}

FactorizationResult factor_dissipation_dt(const System& sys, const SupplyRate& w, const Matrix& P,
                                          const Vector& x, const Vector& xbar) {
  if (sys.continuous()) throw Error(Errc::DomainError, "use factor_dissipation");
  const EquilibriumMap emap(sys);
  const Vector ubar = emap.ku(xbar);
  const Vector e = sys.step(x, ubar) - xbar;  // f(x) − f(x̄) on the manifold
  const Vector dx = x - xbar;
  const Vector dh = sys.h(x) - sys.h(xbar);
  const double a = dx.dot(P * dx) - e.dot(P * e) + dh.dot(w.Q() * dh);
  const Vector b = (w.Q() * sys.J() + w.S()).transpose() * dh - sys.G().transpose() * P * e;
  const Matrix feed = w.rhat(sys.J()) - sys.G().transpose() * P * sys.G();
  return assemble(a, b, 0.5 * (feed + feed.transpose()));
}

std::vector<ProbePair> sector_probes(Eigen::Index m, std::size_t count, double scale,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Vector lo = Vector::Constant(m, -scale), hi = Vector::Constant(m, scale);
  std::vector<ProbePair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.emplace_back(uniform_in_box(rng, lo, hi), uniform_in_box(rng, lo, hi));
  return out;
}

SectorReport check_sector(const StaticNonlinearity& psi, const SectorBounds& bounds,
                          const std::vector<ProbePair>& probes, double tol) {
  const SupplyRate w = SupplyRate::sector(bounds.K1(), bounds.K2());
  SectorReport rep;
  for (const auto& [z1, z2] : probes) {
    const Vector dz = z1 - z2;
    const double v = w(dz, psi(z1) - psi(z2));
    rep.min_value = std::min(rep.min_value, v);
    const double d2 = dz.squaredNorm();
    if (d2 > 0.0) rep.min_normalized = std::min(rep.min_normalized, v / d2);
    if (v < -tol) ++rep.violations;
    ++rep.pairs;
  }
  rep.pass = rep.pairs > 0 && rep.violations == 0;
  return rep;
}

KypReport verify_kyp_lti(const Matrix& F, const Matrix& G, const Matrix& H, const Matrix& J,
                         const SupplyRate& w, const Matrix& P, double tol) {
  const Eigen::Index n = F.rows(), m = G.cols(), p = H.rows();
  if (F.cols() != n || G.rows() != n || H.cols() != n || J.rows() != p || J.cols() != m ||
      P.rows() != n || P.cols() != n || w.p() != p || w.m() != m)
    throw Error(Errc::DimensionMismatch, "KYP data dimensions");
  require_symmetric(P, "P", 1e-10);
  Matrix top = Matrix::Zero(n + m, n + m);
  top.topLeftCorner(n, n) = F.transpose() * P + P * F;
  top.topRightCorner(n, m) = P * G;
  top.bottomLeftCorner(m, n) = G.transpose() * P;
  Matrix T = Matrix::Zero(p + m, n + m);
  T.topLeftCorner(p, n) = H;
  T.topRightCorner(p, m) = J;
  T.bottomRightCorner(m, m) = Matrix::Identity(m, m);
  KypReport rep;
  rep.M = top - T.transpose() * w.block() * T;
  rep.M = 0.5 * (rep.M + rep.M.transpose()).eval();
  rep.lambda_max = max_eigenvalue(rep.M);
  rep.pass = rep.lambda_max <= tol;
  return rep;
}

ObservabilityReport linearized_observability(const System& sys,
                                             const std::vector<IoSample>& samples) {
  ObservabilityReport rep;
  const Eigen::Index n = sys.n(), p = sys.p();
  for (const IoSample& s : samples) {
    const Matrix A = sys.f_jacobian(s.x);
    const Matrix C = sys.h_jacobian(s.x);
    Matrix O(n * p, n);
    Matrix CAk = C;
    for (Eigen::Index k = 0; k < n; ++k) {
      O.middleRows(k * p, p) = CAk;
      CAk = CAk * A;
    }
    ++rep.samples;
    if (numerical_rank(O, 1e-9 * std::max(1.0, O.norm())) == static_cast<std::size_t>(n))
      ++rep.full_rank;
  }
  return rep;
}

}  // namespace eid
