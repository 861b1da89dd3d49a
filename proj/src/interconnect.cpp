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

#include "eidlab/interconnect.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace eid {
namespace {

Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

double condition_number(const Matrix& A) {
  const Vector s = singular_values(A);
  if (s.size() == 0) return 1.0;
  const double smin = s.minCoeff();
  return smin > 0.0 ? s.maxCoeff() / smin : INFINITY;
}

Matrix q_closed(const SupplyRate& w1, const SupplyRate& w2, double kappa) {
  const Eigen::Index p1 = w1.p(), p2 = w2.p();
  Matrix Q(p1 + p2, p1 + p2);
  Q.topLeftCorner(p1, p1) = w1.Q() + kappa * w2.R();
  Q.topRightCorner(p1, p2) = -w1.S() + kappa * w2.S().transpose();
  Q.bottomLeftCorner(p2, p1) = -w1.S().transpose() + kappa * w2.S();
  Q.bottomRightCorner(p2, p2) = w1.R() + kappa * w2.Q();
  return Q;
}

void require_square_loop(const SupplyRate& w1, const SupplyRate& w2) {
  if (w1.m() != w2.p() || w2.m() != w1.p())
    throw Error(Errc::DimensionMismatch, "supply dimensions do not match the loop");
}

}  // namespace

double check_well_posed(const FeedbackLoop& loop) {
  const System& s1 = loop.sigma1;
  const System& s2 = loop.sigma2;
  if (s1.domain() != s2.domain())
    throw Error(Errc::DomainError, "loop mixes continuous and discrete time");
  if (s1.m() != s2.p() || s2.m() != s1.p())
    throw Error(Errc::DimensionMismatch, "loop requires U1 = Y2 and U2 = Y1");
  const Matrix E = Matrix::Identity(s1.m(), s1.m()) + s2.J() * s1.J();
  const double cond = condition_number(E);
  if (!(cond <= kMaxLoopCondition))
    throw Error(Errc::IllPosed, "I + J2 J1 is near singular (cond " + std::to_string(cond) + ")");
  return cond;
}

System compose_closed_loop(const FeedbackLoop& loop) {
  check_well_posed(loop);
  const System s1 = loop.sigma1;
  const System s2 = loop.sigma2;
  const Eigen::Index n1 = s1.n(), n2 = s2.n(), m1 = s1.m(), m2 = s2.m();
  const Matrix J1 = s1.J(), J2 = s2.J();
  const Matrix Einv = (Matrix::Identity(m1, m1) + J2 * J1).inverse();

  // u1 = E⁻¹(v1 − h2 − J2 v2 − J2 h1), u2 = v2 + h1 + J1 u1.
  Matrix Mv(m1 + m2, m1 + m2);
  Mv.topLeftCorner(m1, m1) = Einv;
  Mv.topRightCorner(m1, m2) = -Einv * J2;
  Mv.bottomLeftCorner(m2, m1) = J1 * Einv;
  Mv.bottomRightCorner(m2, m2) = Matrix::Identity(m2, m2) - J1 * Einv * J2;
  const Matrix Gblk = block_diag(s1.G(), s2.G());
  const Matrix Jblk = block_diag(J1, J2);

  // Inputs at v = 0 as functions of the state.
  auto inputs = [=](const Vector& x) {
    const Vector h1 = s1.h(x.head(n1)), h2 = s2.h(x.tail(n2));
    const Vector u1 = Einv * (-h2 - J2 * h1);
    Vector u(m1 + m2);
    u << u1, h1 + J1 * u1;
    return u;
  };
  auto inputs_jacobian = [=](const Vector& x) {
    const Matrix Dh1 = s1.h_jacobian(x.head(n1)), Dh2 = s2.h_jacobian(x.tail(n2));
    Matrix D1(m1, n1 + n2);
    D1 << -Einv * J2 * Dh1, -Einv * Dh2;
    Matrix D2(m2, n1 + n2);
    D2 << Dh1, Matrix::Zero(m2, n2);
    D2 += J1 * D1;
    Matrix D(m1 + m2, n1 + n2);
    D << D1, D2;
    return D;
  };

  System::Parts p;
  p.domain = s1.domain();
  p.f = [=](const Vector& x) -> Vector {
    Vector f(n1 + n2);
    f << s1.f(x.head(n1)), s2.f(x.tail(n2));
    return f + Gblk * inputs(x);
  };
  p.h = [=](const Vector& x) -> Vector {
    Vector h(m2 + m1);
    h << s1.h(x.head(n1)), s2.h(x.tail(n2));
    return h + Jblk * inputs(x);
  };
  p.f_jacobian = [=](const Vector& x) -> Matrix {
    return block_diag(s1.f_jacobian(x.head(n1)), s2.f_jacobian(x.tail(n2))) +
           Gblk * inputs_jacobian(x);
  };
  p.h_jacobian = [=](const Vector& x) -> Matrix {
    return block_diag(s1.h_jacobian(x.head(n1)), s2.h_jacobian(x.tail(n2))) +
           Jblk * inputs_jacobian(x);
  };
  p.G = Gblk * Mv;
  p.J = Jblk * Mv;
  p.family = "feedback(" + s1.family() + "," + s2.family() + ")";
  return System(std::move(p));
}

ComposedSupply compose_supply(const SupplyRate& w1, const SupplyRate& w2, double kappa) {
  require_square_loop(w1, w2);
  if (!(kappa > 0.0)) throw Error(Errc::DomainError, "kappa must be positive");
  const Eigen::Index p1 = w1.p(), p2 = w2.p(), m1 = w1.m(), m2 = w2.m();
  Matrix S(p1 + p2, m1 + m2);
  S.topLeftCorner(p1, m1) = w1.S();
  S.topRightCorner(p1, m2) = kappa * w2.R();
  S.bottomLeftCorner(p2, m1) = -w1.R();
  S.bottomRightCorner(p2, m2) = kappa * w2.S();
  return {q_closed(w1, w2, kappa), S, block_diag(w1.R(), kappa * w2.R()), kappa};
}

KappaSearch kappa_search(const SupplyRate& w1, const SupplyRate& w2, const KappaOptions& opts) {
  require_square_loop(w1, w2);
  if (!(opts.lo > 0.0) || !(opts.hi >= opts.lo) || opts.grid < 1)
    throw Error(Errc::DomainError, "kappa range must be a positive interval");
  auto lam = [&](double kappa) { return max_eigenvalue(q_closed(w1, w2, kappa)); };
  const double llo = std::log(opts.lo), lhi = std::log(opts.hi);
  const int N = opts.grid;
  auto node = [&](int i) { return N == 1 ? opts.lo : std::exp(llo + (lhi - llo) * i / (N - 1)); };
  std::vector<double> vals(static_cast<std::size_t>(N));
  parallel_for(static_cast<std::size_t>(N), opts.jobs,
               [&](std::size_t i) { vals[i] = lam(node(static_cast<int>(i))); });
  // Smallest κ wins ties.
  int best = 0;
  for (int i = 1; i < N; ++i)
    if (vals[static_cast<std::size_t>(i)] < vals[static_cast<std::size_t>(best)]) best = i;

  KappaSearch out{node(best), vals[static_cast<std::size_t>(best)], opts.tol, Verdict::Fail};
  if (N > 2) {
    const double a = std::log(node(std::max(best - 1, 0))),
                 b = std::log(node(std::min(best + 1, N - 1)));
    const double t = golden_section_min([&](double s) { return lam(std::exp(s)); }, a, b, 1e-10);
    const double v = lam(std::exp(t));
    if (v < out.lambda_max) {
      out.kappa = std::exp(t);
      out.lambda_max = v;
    }
  }
  if (out.lambda_max < -opts.tol) out.verdict = Verdict::Pass;
  return out;
}

GradientLoopStability gradient_method_stability(double mu, double L, double alpha, int lambda_grid,
                                                const KappaOptions& opts) {
  if (!(mu > 0.0) || !(L >= mu) || !(alpha > 0.0) || lambda_grid < 1)
    throw Error(Errc::DomainError, "need 0 < mu <= L, alpha > 0");
  const Matrix I = Matrix::Identity(1, 1);
  const SupplyRate integrator(Matrix::Zero(1, 1), 0.5 * I, 0.5 * alpha * I);
  GradientLoopStability best;
  for (int i = 1; i <= lambda_grid; ++i) {
    const double lambda = static_cast<double>(i) / (lambda_grid + 1);
    const SupplyRate grad(-(lambda / L) * I, 0.5 * I, -(1.0 - lambda) * mu * I);
    const KappaSearch k = kappa_search(integrator, grad, opts);
    if (i == 1 || k.lambda_max < best.search.lambda_max) best = {lambda, k};
  }
  return best;
}

System loop_transform(const System& sys, const SectorBounds& bounds) {
  if (sys.m() != sys.p()) throw Error(Errc::NonSquare, "loop transformation needs m = p");
  if (!sys.J().isZero(0.0))
    throw Error(Errc::NonzeroFeedthrough, "loop transformation needs J = 0");
  if (bounds.m() != sys.m()) throw Error(Errc::DimensionMismatch, "sector size differs from m");
  const System s = sys;
  const Matrix K1 = bounds.K1(), K = bounds.K(), G = sys.G();
  System::Parts p;
  p.domain = sys.domain();
  p.f = [=](const Vector& x) -> Vector { return s.f(x) - G * (K1 * s.h(x)); };
  p.h = [=](const Vector& x) -> Vector { return K * s.h(x); };
  p.f_jacobian = [=](const Vector& x) -> Matrix {
    return s.f_jacobian(x) - G * K1 * s.h_jacobian(x);
  };
  p.h_jacobian = [=](const Vector& x) -> Matrix { return K * s.h_jacobian(x); };
  p.G = G;
  p.J = Matrix::Identity(sys.m(), sys.m());
  p.family = "loop_transform(" + sys.family() + ")";
  return System(std::move(p));
}

System close_static_loop(const System& plant, const StaticNonlinearity& psi) {
  if (plant.m() != plant.p()) throw Error(Errc::NonSquare, "static loop needs m = p");
  if (!plant.J().isZero(0.0)) throw Error(Errc::NonzeroFeedthrough, "static loop needs J = 0");
  const System s = plant;
  const Eigen::Index m = plant.m();
  System::Parts p;
  p.domain = plant.domain();
  p.f = [=](const Vector& x) -> Vector { return s.f(x) - s.G() * psi(s.h(x)); };
  p.h = [=](const Vector& x) -> Vector { return s.h(x); };
  p.h_jacobian = [=](const Vector& x) -> Matrix { return s.h_jacobian(x); };
  p.G = plant.G();
  p.J = Matrix::Zero(m, m);
  p.family = "static_loop(" + plant.family() + ")";
  return System(std::move(p));
}

CircleReport circle_criterion(const System& sys, const SectorBounds& bounds,
                              const StorageGenerator& gen, const std::vector<StatePair>& pairs,
                              const CircleOptions& opts) {
  if (opts.grid < 1 || !(opts.eps_lo > 0.0) || !(opts.eps_hi >= opts.eps_lo))
    throw Error(Errc::DomainError, "epsilon grid must be a positive interval");
  const System prime = loop_transform(sys, bounds);
  const Eigen::Index m = sys.m();
  CircleReport report;
  if (opts.psi) {
    const SectorReport sr =
        check_sector(*opts.psi, bounds, sector_probes(m, 1000, 5.0, opts.sector_seed));
    report.sector_ok = sr.pass;
  }
  const double llo = std::log(opts.eps_lo), lhi = std::log(opts.eps_hi);
  for (int i = 0; i < opts.grid; ++i) {
    const double eps =
        opts.grid == 1 ? opts.eps_lo : std::exp(llo + (lhi - llo) * i / (opts.grid - 1));
    const SupplyRate w(-eps * Matrix::Identity(m, m), 0.5 * Matrix::Identity(m, m),
                       Matrix::Zero(m, m));
    EidCertificate cert = verify_eid_ct(prime, w, gen, pairs, opts.certify);
    report.grid.push_back(eps);
    report.certified.push_back(cert.passed());
    if (cert.passed()) {
      report.epsilon = eps;
      report.certificate = std::move(cert);
    }
  }
  const double tol = opts.certify.tol.a;
  if (report.sector_ok && report.epsilon > tol) report.verdict = Verdict::Pass;
  return report;
}

Vector solve_static_loop_equilibrium(const System& plant, const StaticNonlinearity& psi,
                                     const Vector& v, const Vector& x0, double tol) {
  const System loop = close_static_loop(plant, psi);
  auto residual = [&](const Vector& x) -> Vector {
    return loop.continuous() ? loop.step(x, v) : Vector(loop.step(x, v) - x);
  };
  return newton_root(residual, x0, tol, 100);
}

TransformedEquilibrium solve_transformed_equilibrium(const System& plant,
                                                     const SectorBounds& bounds,
                                                     const StaticNonlinearity& psi,
                                                     const Vector& x0, double tol) {
  const System prime = loop_transform(plant, bounds);
  const Eigen::Index n = plant.n(), m = plant.m();
  const Matrix K1 = bounds.K1(), Kinv = bounds.K().inverse();
  auto residual = [&](const Vector& z) -> Vector {
    const Vector x = z.head(n), y = z.segment(n, m), pv = z.tail(m);
    const Vector q = Kinv * (y + pv);
    Vector r(n + 2 * m);
    Vector fx = prime.f(x) - prime.G() * pv;
    if (!prime.continuous()) fx -= x;
    r << fx, y - (prime.h(x) - pv), pv - (psi(q) - K1 * q);
    return r;
  };
  Vector z0(n + 2 * m);
  const Vector y0 = plant.h(x0);
  z0 << x0, bounds.K() * y0 - (psi(y0) - K1 * y0), psi(y0) - K1 * y0;
  const Vector z = newton_root(residual, z0, tol, 100);
  return {z.head(n), z.segment(n, m), z.tail(m)};
}

InclusionSolution solve_monotone_inclusion(const MonotoneMaps& maps, const Vector& v1,
                                           const Vector& v2, const SupplyRate& w1,
                                           const SupplyRate& w2, const InclusionOptions& opts) {
  const Eigen::Index m = v1.size();
  if (v2.size() != m || w1.m() != m || w1.p() != m || w2.m() != m || w2.p() != m)
    throw Error(Errc::DimensionMismatch, "monotone inclusion needs square m-dimensional blocks");
  const Matrix half = 0.5 * Matrix::Identity(m, m);
  if ((w1.S() - half).norm() > 1e-12 || (w2.S() - half).norm() > 1e-12)
    throw Error(Errc::ConditionsNotMet, "both supplies must have S = I/2");
  const double mu_f = -max_eigenvalue(w2.R() + w1.Q());
  const double mu_g = -max_eigenvalue(w1.R() + w2.Q());

  // v1 ∈ F(y1) = K2(y1 + v2) + K1⁻¹(y1), or v2 ∈ G(y2) = K2⁻¹(y2) − K1(v1 − y2).
  std::function<Vector(const Vector&)> op;
  Vector target;
  double mu = 0.0;
  bool primal = true;
  if (mu_f > 0.0 && maps.k1_inverse && maps.k2) {
    op = [&](const Vector& y) -> Vector { return maps.k2(y + v2) + maps.k1_inverse(y); };
    target = v1;
    mu = mu_f;
  } else if (mu_g > 0.0 && maps.k1 && maps.k2_inverse) {
    op = [&](const Vector& y) -> Vector { return maps.k2_inverse(y) - maps.k1(v1 - y); };
    target = v2;
    mu = mu_g;
    primal = false;
  } else {
    throw Error(Errc::ConditionsNotMet,
                "neither R2 + Q1 < 0 nor R1 + Q2 < 0 holds with the maps supplied");
  }

  // Sampled Lipschitz estimate of the operator.
  std::mt19937_64 rng(opts.seed);
  double L = mu;
  for (int i = 0; i < opts.lipschitz_samples; ++i) {
    const Vector a = opts.lipschitz_radius * standard_normal(rng, m);
    const Vector d = opts.lipschitz_radius * standard_normal(rng, m);
    if (d.norm() == 0.0) continue;
    L = std::max(L, (op(a + d) - op(a)).norm() / d.norm());
  }
  const double eta = mu / (L * L);

  InclusionSolution sol;
  sol.modulus = mu;
  sol.lipschitz = L;
  sol.step = eta;
  Vector y = Vector::Zero(m);
  Vector r = op(y) - target;
  int it = 0;
  while (r.norm() > opts.tol) {
    if (it >= opts.max_iter)
      throw Error(Errc::NoConvergence, "monotone inclusion residual " + std::to_string(r.norm()));
    y -= eta * r;
    r = op(y) - target;
    require_finite(r, "monotone inclusion residual");
    ++it;
  }
  sol.iterations = it;
  sol.residual = r.norm();
  if (primal) {
    sol.y1 = y;
    sol.y2 = maps.k2(y + v2);
  } else {
    sol.y2 = y;
    sol.y1 = maps.k1(v1 - y);
  }
  return sol;
}

Json to_json(const KappaSearch& k) {
  return {{"kappa", k.kappa}, {"lambda_max", k.lambda_max}, {"tol", k.tol},
          {"verdict", verdict_name(k.verdict)}};
}

Json to_json(const CircleReport& r) {
  Json j{{"epsilon", r.epsilon},
         {"verdict", verdict_name(r.verdict)},
         {"sector_ok", r.sector_ok},
         {"grid", r.grid},
         {"certified", r.certified}};
  if (r.certificate) j["certificate"] = to_json(*r.certificate);
  return j;
}

}  // namespace eid
