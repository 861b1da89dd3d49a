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

#include "eidlab/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

namespace eid {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::NonSymmetric: return "NonSymmetric";
    case Errc::NonFinite: return "NonFinite";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::SingularJacobian: return "SingularJacobian";
    case Errc::UnknownSystem: return "UnknownSystem";
    case Errc::MissingParam: return "MissingParam";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::NotAssignable: return "NotAssignable";
    case Errc::FullyActuated: return "FullyActuated";
    case Errc::DomainError: return "DomainError";
    case Errc::IllPosed: return "IllPosed";
    case Errc::NonSquare: return "NonSquare";
    case Errc::NonzeroFeedthrough: return "NonzeroFeedthrough";
    case Errc::ConditionsNotMet: return "ConditionsNotMet";
    case Errc::Schema: return "Schema";
  }
  return "Unknown";
}

const Matrix& require_finite(const Matrix& A, const char* what) {
  if (!A.allFinite()) throw Error(Errc::NonFinite, std::string(what) + " has non-finite entries");
  return A;
}

const Vector& require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw Error(Errc::NonFinite, std::string(what) + " has non-finite entries");
  return v;
}

double asymmetry(const Matrix& A) {
  if (A.rows() != A.cols()) return INFINITY;
  return (A - A.transpose()).norm() / std::max(1.0, A.norm());
}

void require_symmetric(const Matrix& A, const char* what, double tol) {
  if (A.rows() != A.cols())
    throw Error(Errc::DimensionMismatch, std::string(what) + " is not square");
  require_finite(A, what);
  if (asymmetry(A) > tol) throw Error(Errc::NonSymmetric, what);
}

EigenResult sym_eigen(const Matrix& A_in) {
  require_symmetric(A_in, "sym_eigen input");
  const Eigen::Index n = A_in.rows();
  Matrix A = 0.5 * (A_in + A_in.transpose());
  Matrix V = Matrix::Identity(n, n);
  const double scale = std::max(A.norm(), 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return A(a, a) < A(b, b); });

  EigenResult out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = order[static_cast<std::size_t>(i)];
    out.values(i) = A(j, j);
    Vector v = V.col(j);
    // Sign convention: largest-magnitude component positive.
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
    out.vectors.col(i) = v;
  }
  return out;
}

const char* definiteness_name(Definiteness d) {
  switch (d) {
    case Definiteness::PD: return "PD";
    case Definiteness::PSD: return "PSD";
    case Definiteness::Indefinite: return "Indefinite";
    case Definiteness::ND: return "ND";
    case Definiteness::NSD: return "NSD";
  }
  return "?";
}

Definiteness psd_check(const Matrix& A, double tol) {
  const Vector ev = sym_eigen(A).values;
  if (ev.size() == 0) return Definiteness::PSD;
  const double lo = ev.minCoeff(), hi = ev.maxCoeff();
  if (lo > tol) return Definiteness::PD;
  if (lo >= -tol) return Definiteness::PSD;
  if (hi < -tol) return Definiteness::ND;
  if (hi <= tol) return Definiteness::NSD;
  return Definiteness::Indefinite;
}

bool is_psd(const Matrix& A, double tol) {
  return A.size() == 0 || min_eigenvalue(A) >= -tol;
}

bool is_nsd(const Matrix& A, double tol) {
  return A.size() == 0 || max_eigenvalue(A) <= tol;
}

double min_eigenvalue(const Matrix& A) {
  const Vector ev = sym_eigen(A).values;
  return ev.size() ? ev(0) : 0.0;
}

double max_eigenvalue(const Matrix& A) {
  const Vector ev = sym_eigen(A).values;
  return ev.size() ? ev(ev.size() - 1) : 0.0;
}

Matrix psd_sqrt(const Matrix& A, double tol) {
  const EigenResult e = sym_eigen(A);
  Vector d(e.values.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (e.values(i) < -tol)
      throw Error(Errc::DomainError, "psd_sqrt: eigenvalue " + std::to_string(e.values(i)));
    d(i) = std::sqrt(std::max(e.values(i), 0.0));
  }
  return e.vectors * d.asDiagonal() * e.vectors.transpose();
}

Matrix psd_pinv(const Matrix& A, double tol) {
  const EigenResult e = sym_eigen(A);
  Vector d(e.values.size());
  for (Eigen::Index i = 0; i < d.size(); ++i)
    d(i) = std::abs(e.values(i)) > tol ? 1.0 / e.values(i) : 0.0;
  return e.vectors * d.asDiagonal() * e.vectors.transpose();
}

Vector singular_values(const Matrix& A) {
  if (A.size() == 0) return Vector(0);
  return Eigen::JacobiSVD<Matrix>(A).singularValues();
}

std::size_t numerical_rank(const Matrix& A, double tol) {
  if (A.size() == 0) return 0;
  const Vector s = singular_values(A);
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++r;
  return r;
}

Matrix jacobian_fd(const VectorField& F, const Vector& x) {
  const Vector f0 = F(x);
  Matrix Jm(f0.size(), x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = std::max(1e-6, 1e-6 * std::abs(x(i)));
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    Jm.col(i) = (F(xp) - F(xm)) / (2.0 * h);
    xp(i) = x(i);
    xm(i) = x(i);
  }
  return Jm;
}

Vector gradient_fd(const std::function<double(const Vector&)>& V, const Vector& x) {
  Vector g(x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = std::max(1e-6, 1e-6 * std::abs(x(i)));
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    g(i) = (V(xp) - V(xm)) / (2.0 * h);
    xp(i) = x(i);
    xm(i) = x(i);
  }
  return g;
}

namespace {

double safe_norm(const Vector& v) {
  return v.allFinite() ? v.norm() : INFINITY;
}

template <class StepFn>
Vector damped_iteration(const VectorField& F, const Vector& x0, const NewtonOptions& opts,
                        StepFn step) {
  Vector x = x0;
  Vector fx = F(x);
  double r = safe_norm(fx);
  for (int it = 0; it <= opts.max_iter; ++it) {
    if (r <= opts.tol) return x;
    if (it == opts.max_iter) break;
    const Matrix Jm = opts.jacobian ? opts.jacobian(x) : jacobian_fd(F, x);
    const Vector dx = step(Jm, fx);
    double lambda = 1.0;
    bool accepted = false;
    while (lambda >= 1.0 / 1024.0) {
      const Vector xn = x + lambda * dx;
      const Vector fn = F(xn);
      const double rn = safe_norm(fn);
      if (rn < (1.0 - 1e-4 * lambda) * r || (lambda == 1.0 && rn <= opts.tol)) {
        x = xn;
        fx = fn;
        r = rn;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      // No decrease along the damped direction; take the full step once and
      // let the iteration budget decide.
      x += dx;
      fx = F(x);
      r = safe_norm(fx);
    }
  }
  throw Error(Errc::NoConvergence,
              "residual " + std::to_string(r) + " after " + std::to_string(opts.max_iter) +
                  " iterations");
}

}  // namespace

Vector newton_root(const VectorField& F, const Vector& x0, const NewtonOptions& opts) {
  const Vector f0 = F(x0);
  if (f0.size() != x0.size())
    throw Error(Errc::DimensionMismatch, "newton_root needs a square system");
  return damped_iteration(F, x0, opts, [](const Matrix& Jm, const Vector& fx) -> Vector {
    Eigen::FullPivLU<Matrix> lu(Jm);
    lu.setThreshold(1e-13);
    if (!lu.isInvertible() || !Jm.allFinite())
      throw Error(Errc::SingularJacobian, "Jacobian is singular");
    return -lu.solve(fx);
  });
}

Vector newton_root(const VectorField& F, const Vector& x0, double tol, int max_iter) {
  NewtonOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  return newton_root(F, x0, opts);
}

Vector newton_project(const VectorField& F, const Vector& x0, const NewtonOptions& opts) {
  return damped_iteration(F, x0, opts, [](const Matrix& Jm, const Vector& fx) -> Vector {
    if (!Jm.allFinite()) throw Error(Errc::SingularJacobian, "non-finite Jacobian");
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Jm);
    cod.setThreshold(1e-12);
    if (cod.rank() == 0) throw Error(Errc::SingularJacobian, "Jacobian is zero");
    return -cod.solve(fx);
  });
}

Vector rk4_step(const InputField& f, const Vector& x, const Vector& u, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::DomainError, "rk4_step needs dt > 0");
  const Vector k1 = f(x, u);
  const Vector k2 = f(x + 0.5 * dt * k1, u);
  const Vector k3 = f(x + 0.5 * dt * k2, u);
  const Vector k4 = f(x + dt * k3, u);
  Vector xn = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return require_finite(xn, "rk4_step state");
}

double golden_section_min(const std::function<double(double)>& fn, double a, double b,
                          double xtol, int max_iter) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int i = 0; i < max_iter && std::abs(b - a) > xtol * std::max(1.0, std::abs(a) + std::abs(b));
       ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = fn(d);
    }
  }
  return fc <= fd ? c : d;
}

Vector uniform_in_box(std::mt19937_64& rng, const Vector& lo, const Vector& hi) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector x(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) x(i) = lo(i) + (hi(i) - lo(i)) * unif(rng);
  return x;
}

Vector standard_normal(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = nd(rng);
  return x;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace eid
