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

#include "eidlab/catalog.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace eid {

Matrix json_to_matrix(const Json& j, const std::string& what) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty())
    throw Error(Errc::Schema, what + " must be a non-empty nested array");
  const bool nested = j.front().is_array();
  const std::size_t rows = nested ? j.size() : 1;
  const std::size_t cols = nested ? j.front().size() : j.size();
  Matrix A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const Json& row = nested ? j[r] : j;
    if (!row.is_array() || row.size() != cols)
      throw Error(Errc::DimensionMismatch, what + " has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw Error(Errc::Schema, what + " entries must be numbers");
      A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return require_finite(A, what.c_str());
}

Vector json_to_vector(const Json& j, const std::string& what) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw Error(Errc::Schema, what + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(Errc::Schema, what + " entries must be numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return require_finite(v, what.c_str());
}

Json matrix_to_json(const Matrix& A) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < A.cols(); ++c) row.push_back(A(r, c));
    out.push_back(row);
  }
  return out;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

namespace {

/// Typed access to a family's parameter object; rejects unknown keys.
class Params {
 public:
  Params(const Json& j, std::string family) : j_(j), family_(std::move(family)) {
    if (!j_.is_object()) throw Error(Errc::Schema, family_ + ": params must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  Eigen::Index array_length(const std::string& key) const {
    return has(key) && j_[key].is_array() ? static_cast<Eigen::Index>(j_[key].size()) : -1;
  }

  double scalar(const std::string& key) {
    const Json& v = need(key);
    if (!v.is_number()) throw Error(Errc::Schema, where(key) + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw Error(Errc::NonFinite, where(key));
    resolved_[key] = x;
    return x;
  }
  double scalar(const std::string& key, double fallback) {
    if (!has(key)) {
      used_.insert(key);
      resolved_[key] = fallback;
      return fallback;
    }
    return scalar(key);
  }

  /// A bare number broadcasts to length n when n is known.
  Vector vector(const std::string& key, Eigen::Index n = -1) {
    const Json& v = need(key);
    Vector out = (v.is_number() && n > 0) ? Vector::Constant(n, v.get<double>())
                                          : json_to_vector(v, where(key));
    if (n > 0 && out.size() != n)
      throw Error(Errc::DimensionMismatch, where(key) + " must have length " + std::to_string(n));
    resolved_[key] = vector_to_json(out);
    return out;
  }
  Vector vector(const std::string& key, Eigen::Index n, double fallback) {
    if (!has(key)) {
      used_.insert(key);
      Vector out = Vector::Constant(n, fallback);
      resolved_[key] = vector_to_json(out);
      return out;
    }
    return vector(key, n);
  }

  Matrix matrix(const std::string& key, Eigen::Index rows = -1, Eigen::Index cols = -1) {
    Matrix A = json_to_matrix(need(key), where(key));
    if ((rows >= 0 && A.rows() != rows) || (cols >= 0 && A.cols() != cols))
      throw Error(Errc::DimensionMismatch, where(key) + " must be " + std::to_string(rows) + "x" +
                                               std::to_string(cols));
    resolved_[key] = matrix_to_json(A);
    return A;
  }
  Matrix matrix_or_zero(const std::string& key, Eigen::Index rows, Eigen::Index cols) {
    if (!has(key)) {
      used_.insert(key);
      Matrix Z = Matrix::Zero(rows, cols);
      resolved_[key] = matrix_to_json(Z);
      return Z;
    }
    return matrix(key, rows, cols);
  }

  bool flag(const std::string& key, bool fallback) {
    used_.insert(key);
    if (!has(key)) {
      resolved_[key] = fallback;
      return fallback;
    }
    if (!j_[key].is_boolean()) throw Error(Errc::Schema, where(key) + " must be a boolean");
    resolved_[key] = j_[key].get<bool>();
    return j_[key].get<bool>();
  }

  Eigen::Index count(const std::string& key, Eigen::Index fallback) {
    const double x = scalar(key, static_cast<double>(fallback));
    if (x < 1.0 || std::floor(x) != x)
      throw Error(Errc::Schema, where(key) + " must be a positive integer");
    return static_cast<Eigen::Index>(x);
  }

  Json finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw Error(Errc::Schema, "unknown parameter " + where(it.key()));
    return resolved_;
  }

 private:
  const Json& need(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw Error(Errc::MissingParam, where(key));
    return j_.at(key);
  }
  std::string where(const std::string& key) const { return family_ + "." + key; }

  const Json& j_;
  std::string family_;
  std::set<std::string> used_;
  Json resolved_ = Json::object();
};

void require_positive(const Vector& v, const std::string& what) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!(v(i) > 0.0)) throw Error(Errc::DomainError, what + " must be positive");
}

Matrix diag(const Vector& v) { return v.asDiagonal(); }

CatalogEntry second_order(Params& P) {
  SeparablePotential U{P.vector("U_mu", 1, 1.0), P.vector("U_c", 1, 0.5)};
  System::Parts s;
  s.f = [U](const Vector& x) -> Vector {
    Vector out(2);
    out << x(1), -U.grad(x.head(1))(0) - x(1);
    return out;
  };
  s.f_jacobian = [U](const Vector& x) -> Matrix {
    Matrix Jf(2, 2);
    Jf << 0.0, 1.0, -U.hess_diag(x.head(1))(0), -1.0;
    return Jf;
  };
  s.h = [](const Vector& x) -> Vector { return x.tail(1); };
  s.h_jacobian = [](const Vector&) -> Matrix { return (Matrix(1, 2) << 0.0, 1.0).finished(); };
  s.G = (Matrix(2, 1) << 0.0, 1.0).finished();
  s.J = Matrix::Zero(1, 1);
  s.family = "second_order";

  StorageGenerator V;
  V.V = [U](const Vector& x) { return 0.5 * x(1) * x(1) + U.value(x.head(1)); };
  V.grad = [U](const Vector& x) -> Vector {
    Vector g(2);
    g << U.grad(x.head(1))(0), x(1);
    return g;
  };
  V.mu = std::min(U.strong_convexity(), 1.0);
  V.convexity = V.mu > 0.0 ? Convexity::StronglyConvex : Convexity::StrictlyConvex;
  return {System(std::move(s)), V, std::nullopt, nullptr, std::nullopt, U, {}};
}

CatalogEntry port_hamiltonian(Params& P) {
  const Matrix Jm = P.matrix("interconnection");
  const Eigen::Index n = Jm.rows();
  if (Jm.cols() != n) throw Error(Errc::DimensionMismatch, "interconnection must be square");
  if ((Jm + Jm.transpose()).norm() > 1e-12)
    throw Error(Errc::DomainError, "interconnection must be skew-symmetric");
  const Matrix Rm = P.matrix("dissipation", n, n);
  require_symmetric(Rm, "dissipation");
  if (!is_psd(Rm)) throw Error(Errc::DomainError, "dissipation must be PSD");
  const Matrix G = P.matrix("G", n);
  SeparablePotential H{P.vector("H_mu", n, 1.0), P.vector("H_c", n, 0.0)};
  require_positive(H.mu, "H_mu");
  const Vector d = P.vector("d", n, 0.0);
  const Matrix JR = Jm - Rm;

  System::Parts s;
  s.f = [H, JR, d](const Vector& x) -> Vector { return JR * H.grad(x) + d; };
  s.f_jacobian = [H, JR](const Vector& x) -> Matrix { return JR * diag(H.hess_diag(x)); };
  s.h = [H, G](const Vector& x) -> Vector { return G.transpose() * H.grad(x); };
  s.h_jacobian = [H, G](const Vector& x) -> Matrix {
    return G.transpose() * diag(H.hess_diag(x));
  };
  s.G = G;
  s.J = Matrix::Zero(G.cols(), G.cols());
  s.family = "port_hamiltonian";

  const Matrix Rhalf = psd_sqrt(Rm);
  CatalogEntry e{System(std::move(s)), H.generator(), Matrix::Zero(n, G.cols()), nullptr,
                 std::nullopt, H, {}};
  e.ell = [H, Rhalf](const Vector& x, const Vector& xbar) -> Vector {
    return Rhalf * (H.grad(x) - H.grad(xbar));
  };
  return e;
}

CatalogEntry gradient_ff(Params& P) {
  const Vector tau = P.vector("tau");
  const Eigen::Index n = tau.size();
  require_positive(tau, "tau");
  SeparablePotential phi{P.vector("mu", n, 1.0), P.vector("c", n, 0.0)};
  require_positive(phi.mu, "mu");
  const double g = P.scalar("g"), j = P.scalar("j");
  if (!(g > 0.0) || !(j > 0.0)) throw Error(Errc::DomainError, "gradient_ff needs g, j > 0");
  const Vector tinv = tau.cwiseInverse();

  System::Parts s;
  s.f = [phi, tinv](const Vector& x) -> Vector { return -tinv.cwiseProduct(phi.grad(x)); };
  s.f_jacobian = [phi, tinv](const Vector& x) -> Matrix {
    return diag(-tinv.cwiseProduct(phi.hess_diag(x)));
  };
  s.h = [g](const Vector& x) -> Vector { return g * x; };
  s.h_jacobian = [g, n](const Vector&) -> Matrix { return g * Matrix::Identity(n, n); };
  s.G = g * diag(tinv);
  s.J = j * Matrix::Identity(n, n);
  s.family = "gradient_ff";
  return {System(std::move(s)), StorageGenerator::quadratic(diag(tau)), std::nullopt, nullptr,
          std::nullopt, phi, {}};
}

CatalogEntry ahu_saddle(Params& P) {
  const Matrix A = P.matrix("A");
  const Eigen::Index n2 = A.rows(), n1 = A.cols();
  if (n2 >= n1 + 1) throw Error(Errc::DimensionMismatch, "A must be wide (n2 <= n1)");
  if (numerical_rank(A) != static_cast<std::size_t>(n2))
    throw Error(Errc::RankDeficient, "A must have full row rank");
  const Vector b = P.vector("b", n2, 0.0);
  const Matrix K = P.matrix_or_zero("K", n2, n2);
  require_symmetric(K, "K");
  if (!is_psd(K)) throw Error(Errc::DomainError, "K must be PSD");
  SeparablePotential phi{P.vector("mu", n1, 1.0), P.vector("c", n1, 0.0)};
  require_positive(phi.mu, "mu");
  const double lmin = min_eigenvalue(diag(phi.mu) + A.transpose() * K * A);
  const double alpha = P.scalar("alpha", 2.0 / lmin);
  if (!(alpha > 0.0)) throw Error(Errc::DomainError, "alpha must be positive");
  const Matrix AtKA = A.transpose() * K * A;
  const Eigen::Index n = n1 + n2;

  System::Parts s;
  s.f = [phi, A, b, K, n1, n2](const Vector& x) -> Vector {
    const Vector z = x.head(n1), lam = x.tail(n2);
    const Vector r = A * z - b;
    Vector out(n1 + n2);
    out << -phi.grad(z) - A.transpose() * (K * r) - A.transpose() * lam, r;
    return out;
  };
  s.f_jacobian = [phi, A, AtKA, n1, n2](const Vector& x) -> Matrix {
    Matrix Jf = Matrix::Zero(n1 + n2, n1 + n2);
    Jf.topLeftCorner(n1, n1) = -diag(phi.hess_diag(x.head(n1))) - AtKA;
    Jf.topRightCorner(n1, n2) = -A.transpose();
    Jf.bottomLeftCorner(n2, n1) = A;
    return Jf;
  };
  s.h = [n1](const Vector& x) -> Vector { return x.head(n1); };
  s.h_jacobian = [n1, n](const Vector&) -> Matrix {
    return Matrix::Identity(n1, n);
  };
  s.G = Matrix::Zero(n, n1);
  s.G.topRows(n1) = Matrix::Identity(n1, n1);
  s.J = Matrix::Zero(n1, n1);
  s.family = "ahu_saddle";
  return {System(std::move(s)), StorageGenerator::quadratic(alpha * Matrix::Identity(n, n)),
          std::nullopt, nullptr, std::nullopt, phi, {}};
}

CatalogEntry smib(Params& P) {
  const double M = P.scalar("M"), D = P.scalar("D"), b = P.scalar("b"), V = P.scalar("V");
  const double Pm = P.scalar("P_m", 0.0);
  if (!(M > 0.0)) throw Error(Errc::DomainError, "smib needs M > 0");
  const double bv2 = b * V * V;

  System::Parts s;
  s.f = [M, D, bv2, Pm](const Vector& x) -> Vector {
    return (Vector(2) << x(1), (Pm - bv2 * std::sin(x(0)) - D * x(1)) / M).finished();
  };
  s.f_jacobian = [M, D, bv2](const Vector& x) -> Matrix {
    return (Matrix(2, 2) << 0.0, 1.0, -bv2 * std::cos(x(0)) / M, -D / M).finished();
  };
  s.h = [](const Vector& x) -> Vector { return x.tail(1); };
  s.h_jacobian = [](const Vector&) -> Matrix { return (Matrix(1, 2) << 0.0, 1.0).finished(); };
  s.G = (Matrix(2, 1) << 0.0, 1.0 / M).finished();
  s.J = Matrix::Zero(1, 1);
  s.family = "smib";

  // ½Mω² + bV²(1 − cos θ); convex only for |θ| < π/2.
  StorageGenerator st;
  st.V = [M, bv2](const Vector& x) {
    return 0.5 * M * x(1) * x(1) + bv2 * (1.0 - std::cos(x(0)));
  };
  st.grad = [M, bv2](const Vector& x) -> Vector {
    return (Vector(2) << bv2 * std::sin(x(0)), M * x(1)).finished();
  };
  st.convexity = Convexity::Convex;
  return {System(std::move(s)), st, std::nullopt, nullptr, std::nullopt, std::nullopt, {}};
}

/// Explicit "n", else the length of an array-valued key, else 1.
Eigen::Index dimension_hint(Params& P, const char* vec_key) {
  const Eigen::Index len = P.array_length(vec_key);
  return P.count("n", len > 0 ? len : 1);
}

CatalogEntry dt_gradient(Params& P) {
  const Eigen::Index n = dimension_hint(P, "mu");
  SeparablePotential phi{P.vector("mu", n, 1.0), P.vector("c", n, 0.0)};
  require_positive(phi.mu, "mu");
  const double alpha = P.scalar("alpha");
  if (!(alpha > 0.0)) throw Error(Errc::DomainError, "alpha must be positive");

  System::Parts s;
  s.domain = TimeDomain::Discrete;
  s.f = [phi, alpha](const Vector& x) -> Vector { return x - alpha * phi.grad(x); };
  s.f_jacobian = [phi, alpha, n](const Vector& x) -> Matrix {
    return Matrix::Identity(n, n) - alpha * diag(phi.hess_diag(x));
  };
  s.h = [](const Vector& x) -> Vector { return x; };
  s.h_jacobian = [n](const Vector&) -> Matrix { return Matrix::Identity(n, n); };
  s.G = alpha * Matrix::Identity(n, n);
  s.J = Matrix::Zero(n, n);
  s.family = "dt_gradient";
  return {System(std::move(s)), std::nullopt, std::nullopt, nullptr, std::nullopt, phi, {}};
}

CatalogEntry dt_integrator(Params& P) {
  const Eigen::Index n = P.count("n", 1);
  const double alpha = P.scalar("alpha");
  if (!(alpha > 0.0)) throw Error(Errc::DomainError, "alpha must be positive");

  System::Parts s;
  s.domain = TimeDomain::Discrete;
  s.f = [](const Vector& x) -> Vector { return x; };
  s.f_jacobian = [n](const Vector&) -> Matrix { return Matrix::Identity(n, n); };
  s.h = [](const Vector& x) -> Vector { return x; };
  s.h_jacobian = [n](const Vector&) -> Matrix { return Matrix::Identity(n, n); };
  s.G = alpha * Matrix::Identity(n, n);
  s.J = Matrix::Zero(n, n);
  s.drift = DriftKind::Identity;
  s.family = "dt_integrator";
  CatalogEntry e{System(std::move(s)), std::nullopt, Matrix::Zero(n, n), nullptr,
                 Matrix(Matrix::Identity(n, n) / (2.0 * alpha)), std::nullopt, {}};
  e.ell = [n](const Vector&, const Vector&) -> Vector { return Vector::Zero(n); };
  return e;
}

CatalogEntry lti(Params& P) {
  const Matrix F = P.matrix("F");
  const Eigen::Index n = F.rows();
  if (F.cols() != n) throw Error(Errc::DimensionMismatch, "F must be square");
  const Matrix G = P.matrix("G", n);
  const Matrix H = P.matrix("H", -1, n);
  const Matrix J = P.matrix_or_zero("J", H.rows(), G.cols());
  const bool discrete = P.flag("discrete", false);

  System::Parts s;
  s.domain = discrete ? TimeDomain::Discrete : TimeDomain::Continuous;
  s.f = [F](const Vector& x) -> Vector { return F * x; };
  s.f_jacobian = [F](const Vector&) -> Matrix { return F; };
  s.h = [H](const Vector& x) -> Vector { return H * x; };
  s.h_jacobian = [H](const Vector&) -> Matrix { return H; };
  s.G = G;
  s.J = J;
  if (!discrete && F.isZero(0.0)) s.drift = DriftKind::Zero;
  if (discrete && F.isIdentity(0.0)) s.drift = DriftKind::Identity;
  s.family = "lti";
  return {System(std::move(s)), std::nullopt, std::nullopt, nullptr, std::nullopt, std::nullopt,
          {}};
}

}  // namespace

const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names = {
      "second_order", "port_hamiltonian", "gradient_ff",   "ahu_saddle",
      "smib",         "dt_gradient",      "dt_integrator", "lti"};
  return names;
}

CatalogEntry catalog_entry(const std::string& name, const Json& params) {
  Params P(params, name);
  CatalogEntry (*build)(Params&) = nullptr;
  if (name == "second_order") build = second_order;
  else if (name == "port_hamiltonian") build = port_hamiltonian;
  else if (name == "gradient_ff") build = gradient_ff;
  else if (name == "ahu_saddle") build = ahu_saddle;
  else if (name == "smib") build = smib;
  else if (name == "dt_gradient") build = dt_gradient;
  else if (name == "dt_integrator") build = dt_integrator;
  else if (name == "lti") build = lti;
  else throw Error(Errc::UnknownSystem, name);
  CatalogEntry e = build(P);
  e.params = P.finish();
  return e;
}

System catalog_build(const std::string& name, const Json& params) {
  return catalog_entry(name, params).system;
}

CatalogEntry load_system(const Json& doc) {
  if (!doc.is_object()) throw Error(Errc::Schema, "system document must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (it.key() != "schema" && it.key() != "family" && it.key() != "params")
      throw Error(Errc::Schema, "unknown key " + it.key());
  if (!doc.contains("schema") || doc["schema"] != 1)
    throw Error(Errc::Schema, "system document needs \"schema\": 1");
  if (!doc.contains("family") || !doc["family"].is_string())
    throw Error(Errc::Schema, "system document needs a family name");
  return catalog_entry(doc["family"].get<std::string>(),
                       doc.contains("params") ? doc["params"] : Json::object());
}

CatalogEntry load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Schema, "cannot open " + path);
  Json doc;
  try {
    in >> doc;
  } catch (const Json::parse_error& e) {
    throw Error(Errc::Schema, path + ": " + e.what());
  }
  return load_system(doc);
}

}  // namespace eid
