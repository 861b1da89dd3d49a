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

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <random>

#include "eidlab/error.hpp"

namespace eid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using VectorField = std::function<Vector(const Vector&)>;
using JacobianField = std::function<Matrix(const Vector&)>;
using InputField = std::function<Vector(const Vector& x, const Vector& u)>;

inline constexpr double kPsdTol = 1e-8;
inline constexpr double kSymmetryTol = 1e-12;

/// Throws NonFinite if any entry is NaN or Inf; returns the argument.
const Matrix& require_finite(const Matrix& A, const char* what);
const Vector& require_finite(const Vector& v, const char* what);

/// Relative asymmetry ‖A − Aᵀ‖_F / max(1, ‖A‖_F).
[[nodiscard]] double asymmetry(const Matrix& A);
void require_symmetric(const Matrix& A, const char* what, double tol = kSymmetryTol);

struct EigenResult {
  Vector values;   // ascending
  Matrix vectors;  // columns are eigenvectors
};

/// Cyclic Jacobi eigensolver for small dense symmetric matrices.
[[nodiscard]] EigenResult sym_eigen(const Matrix& A);

enum class Definiteness { PD, PSD, Indefinite, ND, NSD };

[[nodiscard]] const char* definiteness_name(Definiteness d);

/// Classifies by min/max eigenvalue against ±tol. The zero matrix reports
/// PSD; use is_nsd() for the other side of that boundary.
[[nodiscard]] Definiteness psd_check(const Matrix& A, double tol = kPsdTol);
[[nodiscard]] bool is_psd(const Matrix& A, double tol = kPsdTol);
[[nodiscard]] bool is_nsd(const Matrix& A, double tol = kPsdTol);

[[nodiscard]] double min_eigenvalue(const Matrix& A);
[[nodiscard]] double max_eigenvalue(const Matrix& A);

/// Symmetric PSD square root. Eigenvalues in [−tol, 0) are clipped to zero;
/// anything more negative throws DomainError.
[[nodiscard]] Matrix psd_sqrt(const Matrix& A, double tol = kPsdTol);

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix via sym_eigen.
[[nodiscard]] Matrix psd_pinv(const Matrix& A, double tol = kPsdTol);

[[nodiscard]] Vector singular_values(const Matrix& A);
[[nodiscard]] std::size_t numerical_rank(const Matrix& A, double tol = 1e-10);

/// Central differences, step h_i = max(1e-6, 1e-6·|x_i|).
[[nodiscard]] Matrix jacobian_fd(const VectorField& F, const Vector& x);
[[nodiscard]] Vector gradient_fd(const std::function<double(const Vector&)>& V, const Vector& x);

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 50;
  JacobianField jacobian;  // finite differences when empty
};

/// Damped Newton iteration for square systems; returns x with ‖F(x)‖ ≤ tol.
[[nodiscard]] Vector newton_root(const VectorField& F, const Vector& x0,
                                 const NewtonOptions& opts = {});
[[nodiscard]] Vector newton_root(const VectorField& F, const Vector& x0, double tol,
                                 int max_iter);

/// Gauss-Newton with minimum-norm steps for underdetermined F (rows ≤ cols).
/// Lands on {F = 0} near x0.
[[nodiscard]] Vector newton_project(const VectorField& F, const Vector& x0,
                                    const NewtonOptions& opts = {});

/// Classical RK4 with u held over the step.
[[nodiscard]] Vector rk4_step(const InputField& f, const Vector& x, const Vector& u,
                              double dt);

/// Golden-section minimisation of a unimodal function on [a, b].
[[nodiscard]] double golden_section_min(const std::function<double(double)>& fn, double a,
                                        double b, double xtol = 1e-12, int max_iter = 200);

[[nodiscard]] Vector uniform_in_box(std::mt19937_64& rng, const Vector& lo, const Vector& hi);
[[nodiscard]] Vector standard_normal(std::mt19937_64& rng, Eigen::Index n);

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Callers write to
/// per-index slots so reductions stay in index order.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace eid
