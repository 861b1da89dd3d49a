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

#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "eidlab/catalog.hpp"
#include "eidlab/certify.hpp"
#include "eidlab/equilibria.hpp"
#include "eidlab/gains.hpp"
#include "eidlab/interconnect.hpp"
#include "eidlab/sim.hpp"

namespace eid::cli {

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string system_path;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::string out_dir;
  int jobs = 1;
};

/// Resolved inputs of one command invocation.
struct Run {
  std::string command;
  Options opts;
  Json system_doc;  // null when no --system
  Json config = Json::object();
  std::uint64_t seed = 0;
  Json metrics = Json::object();
  Json artifacts = Json::array();
  Verdict verdict = Verdict::Pass;

  [[nodiscard]] const CatalogEntry& entry() {
    if (!entry_) {
      if (system_doc.is_null()) throw Error(Errc::Schema, command + " needs --system FILE");
      entry_ = load_system(system_doc);
    }
    return *entry_;
  }

  /// Opens out/name for writing and records it, or returns nullptr without --out.
  std::unique_ptr<std::ofstream> artifact(const std::string& name) {
    if (opts.out_dir.empty()) return nullptr;
    fs::create_directories(opts.out_dir);
    const fs::path p = fs::path(opts.out_dir) / name;
    auto f = std::make_unique<std::ofstream>(p);
    if (!*f) throw Error(Errc::Schema, "cannot write " + p.string());
    artifacts.push_back(p.string());
    return f;
  }

 private:
  std::optional<CatalogEntry> entry_;
};

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Schema, "cannot open " + path);
  return Json::parse(in);
}

// ---- config helpers ------------------------------------------------------

double num(const Json& c, const char* key, double fallback) {
  return c.contains(key) ? c.at(key).get<double>() : fallback;
}

std::size_t count(const Json& c, const char* key, std::size_t fallback) {
  if (!c.contains(key)) return fallback;
  const auto v = c.at(key).get<long long>();
  if (v < 0) throw Error(Errc::Schema, std::string(key) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

Vector vec(const Json& j, Eigen::Index n, const std::string& what) {
  if (j.is_number()) return Vector::Constant(n, j.get<double>());
  Vector v = json_to_vector(j, what);
  if (v.size() != n) throw Error(Errc::DimensionMismatch, what + " must have length " + std::to_string(n));
  return v;
}

Matrix diag_or_matrix(const Json& j, Eigen::Index n, const std::string& what) {
  if (j.is_number()) return j.get<double>() * Matrix::Identity(n, n);
  if (j.is_array() && !j.empty() && j.front().is_number()) return vec(j, n, what).asDiagonal();
  Matrix M = json_to_matrix(j, what);
  if (M.rows() != n || M.cols() != n) throw Error(Errc::DimensionMismatch, what + " has wrong size");
  return M;
}

Box box(const Json& c, const char* key, Eigen::Index n, double lo, double hi) {
  if (!c.contains(key)) return {Vector::Constant(n, lo), Vector::Constant(n, hi)};
  const Json& b = c.at(key);
  return {vec(b.at("lo"), n, std::string(key) + ".lo"), vec(b.at("hi"), n, std::string(key) + ".hi")};
}

SupplyRate parse_supply(const Json& j, Eigen::Index m, Eigen::Index p) {
  if (j.is_string()) return parse_supply(Json{{"kind", j}}, m, p);
  if (j.contains("Q")) {
    return {json_to_matrix(j.at("Q"), "Q"), json_to_matrix(j.at("S"), "S"),
            json_to_matrix(j.at("R"), "R")};
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "passivity") return SupplyRate::passivity(m);
  if (kind == "l2_gain") return SupplyRate::l2_gain(p, m, j.at("gamma").get<double>());
  if (kind == "ifp_osp") return SupplyRate::ifp_osp(m, num(j, "a", 0.0), num(j, "nu", 0.0));
  if (kind == "sector")
    return SupplyRate::sector(diag_or_matrix(j.at("K1"), m, "K1"), diag_or_matrix(j.at("K2"), m, "K2"));
  throw Error(Errc::Schema, "unknown supply kind " + kind);
}

Json supply_json(const SupplyRate& w) {
  return {{"Q", matrix_to_json(w.Q())}, {"S", matrix_to_json(w.S())}, {"R", matrix_to_json(w.R())}};
}

SectorBounds parse_sector(const Json& j, Eigen::Index m) {
  return {diag_or_matrix(j.at("K1"), m, "K1"), diag_or_matrix(j.at("K2"), m, "K2")};
}

StaticNonlinearity parse_psi(const Json& j, Eigen::Index m) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "saturation")
    return StaticNonlinearity::saturation(m, num(j, "lower", 0.0), num(j, "upper", 1.0),
                                          num(j, "limit", 1.0));
  if (kind == "linear") return StaticNonlinearity::linear(diag_or_matrix(j.at("K"), m, "K"));
  throw Error(Errc::Schema, "unknown nonlinearity kind " + kind);
}

/// Catalog storage by default; "shifted" and {"quadratic": P} on request.
struct StorageChoice {
  std::optional<StorageGenerator> generator;
  StorageFamily family;
  std::string name;
};

StorageChoice parse_storage(const Json& c, const CatalogEntry& e) {
  const Json s = c.value("storage", Json("catalog"));
  if (s.is_object() && s.contains("quadratic")) {
    const Matrix P = json_to_matrix(s.at("quadratic"), "storage.quadratic");
    if (!e.system.continuous()) return {std::nullopt, StorageFamily::quadratic(P), "quadratic"};
    const StorageGenerator g = StorageGenerator::quadratic(P);
    return {g, StorageFamily::bregman(g), "quadratic"};
  }
  const std::string name = s.get<std::string>();
  if (!e.system.continuous()) {
    if (name != "catalog" || !e.P) throw Error(Errc::MissingParam, "discrete storage needs a P matrix");
    return {std::nullopt, StorageFamily::quadratic(*e.P), "catalog"};
  }
  if (!e.storage) throw Error(Errc::MissingParam, "system family has no catalog storage");
  if (name == "catalog") return {*e.storage, StorageFamily::bregman(*e.storage), name};
  if (name == "shifted") return {std::nullopt, StorageFamily::shifted(*e.storage), name};
  throw Error(Errc::Schema, "unknown storage " + name);
}

CertifyOptions certify_options(const Run& run, const CatalogEntry& e) {
  CertifyOptions o;
  const Json& c = run.config;
  if (c.value("mode", std::string("inequality")) == "equality") o.mode = CheckMode::Equality;
  if (run.opts.tol) o.tol.a = o.tol.b = *run.opts.tol;
  if (c.contains("tol")) o.tol.a = o.tol.b = c.at("tol").get<double>();
  if (c.value("catalog_certificate", false)) {
    o.W = e.W;
    o.ell = e.ell;
  }
  if (c.contains("W")) o.W = json_to_matrix(c.at("W"), "W");
  o.jobs = run.opts.jobs;
  o.seed = run.seed;
  return o;
}

std::vector<StatePair> pairs_from_config(const Run& run, const System& sys) {
  const Json& c = run.config;
  const Eigen::Index n = sys.n();
  return sample_pairs(EquilibriumMap(sys), box(c, "state_box", n, -2.0, 2.0),
                      box(c, "eq_box", n, -1.0, 1.0), count(c, "pairs", 1000), run.seed,
                      run.opts.jobs);
}

/// Equilibrium from "xbar" (must be assignable) or the first sampled one.
IoSample equilibrium_from_config(const Run& run, const System& sys) {
  const EquilibriumMap emap(sys);
  if (run.config.contains("xbar")) return ku_ky(emap, vec(run.config.at("xbar"), sys.n(), "xbar"));
  const IoSampling s = sample_io_relation(emap, box(run.config, "eq_box", sys.n(), -1.0, 1.0), 1, run.seed);
  if (s.samples.empty()) throw Error(Errc::NoConvergence, "no equilibrium found in eq_box");
  return s.samples.front();
}

/// Input sequence: ū held, ū plus random sinusoids, or an absolute constant.
std::vector<Vector> input_from_config(const Json& c, const System& sys, const Vector& ubar,
                                      std::size_t steps, double dt, std::uint64_t seed) {
  const Json u = c.value("u", Json{{"kind", "hold"}});
  const std::string kind = u.at("kind").get<std::string>();
  std::vector<Vector> seq;
  if (kind == "hold") return std::vector<Vector>(steps, ubar);
  if (kind == "constant") return std::vector<Vector>(steps, vec(u.at("value"), sys.m(), "u.value"));
  if (kind != "random") throw Error(Errc::Schema, "unknown input kind " + kind);
  const double amp = num(u, "amplitude", 1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const Eigen::Index m = sys.m();
  Matrix a(m, 3), w(m, 3), ph(m, 3);
  for (Eigen::Index i = 0; i < m; ++i)
    for (int j = 0; j < 3; ++j) {
      a(i, j) = amp * (2 * u01(rng) - 1);
      w(i, j) = 4.0 * u01(rng);
      ph(i, j) = 6.3 * u01(rng);
    }
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    Vector v = ubar;
    for (Eigen::Index i = 0; i < m; ++i)
      for (int j = 0; j < 3; ++j) v(i) += a(i, j) * std::sin(w(i, j) * t + ph(i, j));
    seq.push_back(v);
  }
  return seq;
}

/// Plant, optionally closed with a static nonlinearity from "loop.psi".
System maybe_closed(const Json& c, const System& plant) {
  if (!c.contains("loop")) return plant;
  return close_static_loop(plant, parse_psi(c.at("loop").at("psi"), plant.m()));
}

Trajectory simulate_from_config(const Json& c, const System& sys, const Vector& x0,
                                const Vector& ubar, std::uint64_t seed) {
  if (sys.continuous()) {
    const double dt = num(c, "dt", 1e-3);
    const auto N = static_cast<std::size_t>(std::llround(num(c, "T", 10.0) / dt));
    if (N == 0) throw Error(Errc::DomainError, "T/dt gives no steps");
    return simulate_ct(sys, x0, input_from_config(c, sys, ubar, N, dt, seed), dt);
  }
  const std::size_t N = count(c, "steps", 100);
  return simulate_dt(sys, x0, input_from_config(c, sys, ubar, N, 1.0, seed));
}

// ---- commands --------------------------------------------------------------

void cmd_certify(Run& run) {
  const CatalogEntry& e = run.entry();
  if (!e.system.continuous()) throw Error(Errc::DomainError, "certify needs a continuous system; use certify-dt");
  const SupplyRate w = parse_supply(run.config.value("supply", Json("passivity")), e.system.m(), e.system.p());
  const StorageChoice st = parse_storage(run.config, e);
  const auto pairs = pairs_from_config(run, e.system);
  run.metrics["storage"] = st.name;
  run.metrics["supply"] = supply_json(w);
  if (st.generator) {
    const EidCertificate cert = verify_eid_ct(e.system, w, *st.generator, pairs, certify_options(run, e));
    run.metrics["certificate"] = to_json(cert);
    run.verdict = cert.verdict;
    return;
  }
  // General storage family: the dissipation matrix must be PSD at every pair.
  const double tol = run.opts.tol.value_or(num(run.config, "tol", 1e-7));
  std::vector<double> margins(pairs.size());
  parallel_for(pairs.size(), run.opts.jobs, [&](std::size_t i) {
    margins[i] = factor_dissipation(e.system, w, st.family, pairs[i].x, pairs[i].xbar).margin;
  });
  std::size_t worst = 0, violations = 0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    if (margins[i] < margins[worst]) worst = i;
    violations += margins[i] < -tol ? 1 : 0;
  }
  run.metrics["pairs"] = pairs.size();
  run.metrics["min_margin"] = margins[worst];
  run.metrics["violations"] = violations;
  run.metrics["worst_pair"] = {{"x", vector_to_json(pairs[worst].x)}, {"xbar", vector_to_json(pairs[worst].xbar)}};
  run.metrics["tol"] = tol;
  run.verdict = violations == 0 ? Verdict::Pass : Verdict::Fail;
}

void cmd_certify_dt(Run& run) {
  const CatalogEntry& e = run.entry();
  if (e.system.continuous()) throw Error(Errc::DomainError, "certify-dt needs a discrete system");
  const SupplyRate w = parse_supply(run.config.value("supply", Json("passivity")), e.system.m(), e.system.p());
  std::optional<Matrix> P = e.P;
  if (run.config.contains("P")) P = json_to_matrix(run.config.at("P"), "P");
  if (!P) throw Error(Errc::MissingParam, "certify-dt needs P");
  const EidCertificate cert = verify_eid_dt(e.system, w, *P, pairs_from_config(run, e.system), certify_options(run, e));
  run.metrics["certificate"] = to_json(cert);
  run.verdict = cert.verdict;
}

void cmd_kyp(Run& run) {
  const Json& c = run.config;
  Json src = c;
  if (!run.system_doc.is_null()) {
    const CatalogEntry& e = run.entry();
    if (e.system.family() != "lti") throw Error(Errc::Schema, "kyp needs an lti system");
    src = e.params;
    for (const auto& [k, v] : c.items()) src[k] = v;
  }
  const Matrix F = json_to_matrix(src.at("F"), "F"), G = json_to_matrix(src.at("G"), "G"),
               H = json_to_matrix(src.at("H"), "H");
  const Matrix J = src.contains("J") ? json_to_matrix(src.at("J"), "J") : Matrix::Zero(H.rows(), G.cols());
  const SupplyRate w = parse_supply(src.value("supply", Json("passivity")), G.cols(), H.rows());
  const KypReport r = verify_kyp_lti(F, G, H, J, w, json_to_matrix(src.at("P"), "P"), run.opts.tol.value_or(1e-9));
  run.metrics["lambda_max"] = r.lambda_max;
  run.metrics["M"] = matrix_to_json(r.M);
  run.verdict = r.pass ? Verdict::Pass : Verdict::Fail;
}

void cmd_region(Run& run) {
  const Json& c = run.config;
  const FeasibleRegion r = gradient_ff_region(num(c, "mu", 2.0), num(c, "g", 1.0), num(c, "j", 0.9));
  run.metrics["nu_intercept"] = r.nu_intercept();
  run.metrics["rho_intercept"] = r.rho_intercept_feedthrough();
  run.metrics["rho_cap"] = r.rho_cap();
  if (auto f = run.artifact("region.csv"))
    write_region_csv(*f, r, num(c, "nu_lo", 0.0), num(c, "nu_hi", 1.0), static_cast<int>(count(c, "count", 101)));
  const std::size_t recheck = count(c, "recheck", 0);
  if (recheck == 0) return;
  // Re-check random interior points with the certificate on the quadratic instance.
  Json params{{"tau", c.value("tau", Json::array({1.0, 2.0}))}, {"mu", r.mu()}, {"c", 0.0}, {"g", r.g()}, {"j", r.j()}};
  const CatalogEntry e = catalog_entry("gradient_ff", params);
  const auto pairs = sample_pairs(EquilibriumMap(e.system), box(c, "state_box", e.system.n(), -3, 3),
                                  box(c, "eq_box", e.system.n(), -2, 2), count(c, "pairs", 500), run.seed, run.opts.jobs);
  std::mt19937_64 rng(run.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::size_t passed = 0;
  for (std::size_t i = 0; i < recheck; ++i) {
    const double nu = 0.95 * r.j() * u01(rng);
    const double rho = 0.98 * r.rho_max(nu) * u01(rng);
    passed += verify_eid_ct(e.system, SupplyRate::ifp_osp(e.system.m(), rho, nu), *e.storage, pairs).passed() ? 1 : 0;
  }
  run.metrics["recheck"] = {{"points", recheck}, {"passed", passed}};
  run.verdict = passed == recheck ? Verdict::Pass : Verdict::Fail;
}

std::vector<double> list(const Json& c, const char* key, std::vector<double> fallback) {
  if (!c.contains(key)) return fallback;
  if (c.at(key).is_number()) return {c.at(key).get<double>()};
  return c.at(key).get<std::vector<double>>();
}

void cmd_gain(Run& run) {
  const Json& c = run.config;
  const std::string formula = c.value("formula", std::string("dt_gradient"));
  auto f = run.artifact("gain.csv");
  std::ostringstream csv;
  csv.precision(17);
  Json rows = Json::array();
  if (formula == "ifp_osp") {
    csv << "a,b,gamma,delta_star\n";
    for (double a : list(c, "a", {1.0}))
      for (double b : list(c, "b", {0.0})) {
        const GainBound g = ifp_osp_gain(a, b);
        csv << a << ',' << b << ',' << g.gamma << ',' << g.parameters.at("delta_star") << '\n';
        rows.push_back(to_json(g));
      }
  } else if (formula == "dt_gradient") {
    csv << "mu,alpha,gamma\n";
    for (double mu : list(c, "mu", {1.0})) {
      if (!(mu > 0.0)) throw Error(Errc::DomainError, "mu must be positive");
      csv << mu << ",0," << 1.0 / mu << '\n';  // α → 0 limit
      for (double alpha : list(c, "alpha", {0.1, 0.5, 1.0})) {
        const GainBound g = dt_gradient_gain(mu, alpha);
        csv << mu << ',' << alpha << ',' << g.gamma << '\n';
        rows.push_back(to_json(g));
      }
    }
  } else if (formula == "ahu") {
    const Matrix A = json_to_matrix(c.at("A"), "A");
    const Matrix M = diag_or_matrix(c.value("M", Json(1.0)), A.cols(), "M");
    const Matrix K = c.contains("K") ? diag_or_matrix(c.at("K"), A.rows(), "K") : Matrix::Zero(A.rows(), A.rows());
    const GainBound star = ahu_gain(M, A, K);
    csv << "gamma,alpha,lambda_min\n";
    for (double gamma : list(c, "gamma", {star.gamma})) {
      const GainBound g = ahu_gain(M, A, K, gamma);
      csv << g.gamma << ',' << g.parameters.at("alpha") << ',' << g.parameters.at("lambda_min") << '\n';
      rows.push_back(to_json(g));
    }
  } else {
    throw Error(Errc::Schema, "unknown gain formula " + formula);
  }
  if (f) *f << csv.str();
  run.metrics["formula"] = formula;
  run.metrics["bounds"] = rows;
}

SupplyRate supply_with_dims(const Json& j) {
  const auto m = static_cast<Eigen::Index>(j.is_object() ? j.value("m", 1) : 1);
  const auto p = static_cast<Eigen::Index>(j.is_object() ? j.value("p", static_cast<int>(m)) : m);
  return parse_supply(j, m, p);
}

void cmd_compose(Run& run) {
  const Json& c = run.config;
  const double tol = run.opts.tol.value_or(1e-9);
  if (c.contains("gradient_method")) {
    const Json& g = c.at("gradient_method");
    KappaOptions ko;
    ko.tol = tol;
    ko.jobs = run.opts.jobs;
    if (g.contains("kappa")) ko.lo = ko.hi = g.at("kappa").get<double>(), ko.grid = 1;
    const GradientLoopStability s = gradient_method_stability(num(g, "mu", 1.0), num(g, "L", 1.0), num(g, "alpha", 1.0),
                                                              static_cast<int>(count(g, "lambda_grid", 99)), ko);
    run.metrics["lambda"] = s.lambda;
    run.metrics["search"] = to_json(s.search);
    run.verdict = s.search.verdict;
    return;
  }
  const SupplyRate w1 = supply_with_dims(c.at("w1")), w2 = supply_with_dims(c.at("w2"));
  double kappa = 0.0;
  if (c.contains("kappa")) {
    kappa = c.at("kappa").get<double>();
  } else {
    KappaOptions ko;
    ko.tol = tol;
    ko.jobs = run.opts.jobs;
    if (c.contains("kappa_range")) {
      ko.lo = c.at("kappa_range").at(0).get<double>();
      ko.hi = c.at("kappa_range").at(1).get<double>();
    }
    ko.grid = static_cast<int>(count(c, "grid", 60));
    const KappaSearch k = kappa_search(w1, w2, ko);
    run.metrics["search"] = to_json(k);
    kappa = k.kappa;
  }
  const ComposedSupply cs = compose_supply(w1, w2, kappa);
  const double lmax = max_eigenvalue(cs.Q);
  run.metrics["kappa"] = kappa;
  run.metrics["lambda_max"] = lmax;
  run.metrics["supply"] = supply_json(cs.rate());
  run.verdict = lmax < -tol ? Verdict::Pass : Verdict::Fail;
}

void cmd_circle(Run& run) {
  const CatalogEntry& e = run.entry();
  if (!e.storage) throw Error(Errc::MissingParam, "circle needs a catalog storage");
  const Json& c = run.config;
  const SectorBounds bounds = parse_sector(c.at("sector"), e.system.m());
  CircleOptions o;
  o.grid = static_cast<int>(count(c, "grid", 40));
  o.eps_lo = num(c, "eps_lo", 1e-6);
  o.eps_hi = num(c, "eps_hi", 1.0);
  o.certify = certify_options(run, e);
  o.sector_seed = run.seed;
  if (c.contains("psi")) o.psi = parse_psi(c.at("psi"), e.system.m());
  const CircleReport r = circle_criterion(e.system, bounds, *e.storage, pairs_from_config(run, e.system), o);
  Json j = to_json(r);
  j.erase("certificate");
  run.metrics = j;
  run.verdict = r.verdict;
}

void cmd_simulate(Run& run) {
  const System sys = maybe_closed(run.config, run.entry().system);
  const Vector x0 = vec(run.config.value("x0", Json(0.0)), sys.n(), "x0");
  const Vector u0 = Vector::Zero(sys.m());
  const Trajectory tr = simulate_from_config(run.config, sys, x0, u0, run.seed);
  if (auto f = run.artifact("trajectory.csv")) write_trajectory_csv(*f, tr);
  run.metrics["steps"] = tr.steps();
  run.metrics["final_state"] = vector_to_json(tr.states.back());
}

void cmd_audit(Run& run) {
  const CatalogEntry& e = run.entry();
  const Json& c = run.config;
  const SupplyRate w = parse_supply(c.value("supply", Json("passivity")), e.system.m(), e.system.p());
  const StorageChoice st = parse_storage(c, e);
  const IoSample eq = equilibrium_from_config(run, e.system);
  const std::size_t runs = std::max<std::size_t>(1, count(c, "runs", 1));
  const std::optional<double> tol = run.opts.tol ? run.opts.tol : (c.contains("tol") ? std::optional(c.at("tol").get<double>()) : std::nullopt);
  std::mt19937_64 rng(run.seed);
  double worst = -INFINITY;
  std::size_t failed = 0;
  Json first;
  for (std::size_t r = 0; r < runs; ++r) {
    const std::uint64_t s = rng();
    std::mt19937_64 xr(s);
    Vector x0 = c.contains("x0") ? vec(c.at("x0"), e.system.n(), "x0")
                                 : Vector(eq.x + num(c, "spread", 1.0) * standard_normal(xr, e.system.n()));
    const Trajectory tr = simulate_from_config(c, e.system, x0, eq.u, s);
    const DissipationAudit a = audit_dissipation(tr, st.family, eq, w, tol);
    if (r == 0) {
      first = to_json(a);
      if (auto f = run.artifact("audit.csv")) write_trajectory_csv(*f, tr, &a);
    }
    worst = std::max(worst, a.max_violation);
    failed += a.passed() ? 0 : 1;
  }
  run.metrics["storage"] = st.name;
  run.metrics["equilibrium"] = {{"x", vector_to_json(eq.x)}, {"u", vector_to_json(eq.u)}, {"y", vector_to_json(eq.y)}};
  run.metrics["runs"] = runs;
  run.metrics["failed_runs"] = failed;
  run.metrics["max_violation"] = worst;
  run.metrics["first_run"] = first;
  run.verdict = failed == 0 ? Verdict::Pass : Verdict::Fail;
}

void cmd_stability(Run& run) {
  const Json& c = run.config;
  const System sys = maybe_closed(c, run.entry().system);
  const Vector xbar = vec(c.at("xbar"), sys.n(), "xbar");
  const Vector ubar = c.contains("ubar") ? vec(c.at("ubar"), sys.m(), "ubar") : ku_ky(EquilibriumMap(sys), xbar).u;
  StabilityOptions o;
  o.probes = count(c, "probes", 32);
  o.radius = num(c, "radius", 0.1);
  o.horizon = num(c, "horizon", sys.continuous() ? 20.0 : 200.0);
  o.dt = num(c, "dt", 1e-2);
  o.converge_tol = num(c, "converge_tol", 1e-4);
  o.jobs = run.opts.jobs;
  const StabilityReport r = stability_experiment(sys, xbar, ubar, o);
  run.metrics = to_json(r);
  run.verdict = r.all_converged() ? Verdict::Pass : Verdict::Fail;
}

void cmd_io_relation(Run& run) {
  const CatalogEntry& e = run.entry();
  const Json& c = run.config;
  const IoSampling s = sample_io_relation(EquilibriumMap(e.system), box(c, "box", e.system.n(), -1.0, 1.0),
                                          count(c, "count", 200), run.seed, run.opts.jobs);
  if (auto f = run.artifact("io_relation.csv")) write_io_csv(*f, s.samples);
  run.metrics["samples"] = s.samples.size();
  run.metrics["projection_failures"] = s.projection_failures;
  if (c.contains("supply")) {
    const SupplyRate w = parse_supply(c.at("supply"), e.system.m(), e.system.p());
    const RelationReport r = check_relation_dissipativity(s.samples, w, run.opts.tol.value_or(1e-10));
    run.metrics["min_value"] = r.min_value;
    run.metrics["violations"] = r.violations;
    run.verdict = r.dissipative() ? Verdict::Pass : Verdict::Fail;
  }
}

const std::map<std::string, std::pair<std::function<void(Run&)>, const char*>>& commands() {
  static const std::map<std::string, std::pair<std::function<void(Run&)>, const char*>> table = {
      {"certify", {cmd_certify, "Check the incremental Hill-Moylan conditions (continuous time)"}},
      {"certify-dt", {cmd_certify_dt, "Check the discrete-time conditions with storage ||x - xbar||_P^2"}},
      {"kyp", {cmd_kyp, "Evaluate the KYP matrix of an LTI system for a given P"}},
      {"region", {cmd_region, "Feasible (nu, rho) region of the gradient system with feedthrough"}},
      {"gain", {cmd_gain, "Closed-form gain bounds and sweeps"}},
      {"compose", {cmd_compose, "Compose supplies across a feedback loop and search kappa"}},
      {"circle", {cmd_circle, "Equilibrium-independent circle criterion"}},
      {"simulate", {cmd_simulate, "Simulate a system or a static feedback loop"}},
      {"audit", {cmd_audit, "Audit the dissipation inequality along trajectories"}},
      {"stability", {cmd_stability, "Converge from a probe shell around an equilibrium"}},
      {"io-relation", {cmd_io_relation, "Sample the equilibrium input-output relation"}},
  };
  return table;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"eid-lab: equilibrium-independent dissipativity toolkit", "eid-lab"};
  app.require_subcommand(1);
  Options opts;
  std::uint64_t seed = 0;
  double tol = 0.0;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, cmd] : commands()) {
    CLI::App* sub = app.add_subcommand(name, cmd.second);
    sub->add_option("--system", opts.system_path, "System JSON file")->check(CLI::ExistingFile);
    sub->add_option("--config", opts.config_path, "Analysis config JSON file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Random seed (falls back to EIDLAB_SEED)");
    sub->add_option("--tol", tol, "Tolerance override");
    sub->add_option("--out", opts.out_dir, "Directory for report.json and CSV artifacts");
    sub->add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
    subs[name] = sub;
  }

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitError;
  }

  try {
    Run r;
    for (const auto& [name, sub] : subs)
      if (sub->parsed()) r.command = name;
    if (subs[r.command]->count("--seed") > 0) {
      opts.seed = seed;
    } else if (const char* env = std::getenv("EIDLAB_SEED")) {
      opts.seed = std::stoull(env);
    }
    if (subs[r.command]->count("--tol") > 0) opts.tol = tol;
    r.opts = opts;
    r.seed = opts.seed.value_or(0);
    if (!opts.system_path.empty()) r.system_doc = read_json_file(opts.system_path);
    if (!opts.config_path.empty()) r.config = read_json_file(opts.config_path);
    if (!r.config.is_object()) throw Error(Errc::Schema, "config must be a JSON object");

    const Json resolved{{"command", r.command},     {"system", r.system_doc}, {"config", r.config},
                        {"seed", r.seed},           {"tol", opts.tol ? Json(*opts.tol) : Json(nullptr)}};
    commands().at(r.command).first(r);

    Json report{{"command", r.command},
                {"config_hash", fnv1a_hex(resolved.dump())},
                {"seed", r.seed},
                {"verdict", verdict_name(r.verdict)},
                {"metrics", r.metrics},
                {"artifacts", r.artifacts}};
    if (auto f = r.artifact("report.json")) {
      report["artifacts"] = r.artifacts;
      *f << report.dump(2) << '\n';
    }
    out << report.dump(2) << '\n';
    return r.verdict == Verdict::Pass ? kExitPass : kExitFail;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const Json::exception& e) {
    err << "error: invalid JSON: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitError;
}

}  // namespace eid::cli
