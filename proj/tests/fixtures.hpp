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

// Shared system instances for unit and acceptance tests.
#pragma once

#include <cmath>

#include "eidlab/catalog.hpp"
#include "eidlab/equilibria.hpp"

namespace fixtures {

using eid::Json;

/// Four states, two inputs, rank-two dissipation, nonzero constant disturbance.
inline Json port_hamiltonian_params() {
  return Json::parse(R"({
    "interconnection": [[0, 1, -0.5, 0], [-1, 0, 0.3, 0.2], [0.5, -0.3, 0, 1], [0, -0.2, -1, 0]],
    "dissipation": [[0.6, 0.1, 0, 0], [0.1, 0.4, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]],
    "G": [[1, 0], [0, 0], [0, 1], [0.5, 0]],
    "H_mu": [1.0, 2.0, 0.5, 1.5],
    "H_c": [0.3, 0.1, 0.2, 0.4],
    "d": [0.1, -0.2, 0.05, 0.0]
  })");
}

inline Json gradient_ff_params(double mu = 2.0, double c = 0.0) {
  return Json{{"tau", {1.0, 2.0}}, {"mu", mu}, {"c", c}, {"g", 1.0}, {"j", 0.9}};
}

/// Four primal variables, two constraints, K = 0.
inline Json ahu_params_k0() {
  return Json::parse(R"({
    "A": [[1, 0.5, -0.3, 0.2], [0, 1, 0.4, -0.6]],
    "b": [0.5, -0.25],
    "mu": 1.0
  })");
}

/// Square invertible A with K = A⁻ᵀA⁻¹, so M + AᵀKA = 2I.
inline Json ahu_params_k2() {
  Eigen::MatrixXd A(4, 4);
  A << 2, 0.5, 0, 0.1, 0.3, 1.5, -0.2, 0, 0, 0.4, 1.8, 0.3, 0.1, 0, 0.2, 1.2;
  const Eigen::MatrixXd Ainv = A.inverse();
  const Eigen::MatrixXd K = Ainv.transpose() * Ainv;
  Json j;
  j["A"] = eid::matrix_to_json(A);
  j["K"] = eid::matrix_to_json(0.5 * (K + K.transpose()));
  j["b"] = {0.2, -0.1, 0.3, 0.0};
  j["mu"] = 1.0;
  return j;
}

inline Json smib_params(double Pm = 0.2) {
  return Json{{"M", 1.0}, {"D", 1.0}, {"b", 1.0}, {"V", 1.0}, {"P_m", Pm}};
}

inline eid::Box box(Eigen::Index n, double lo, double hi) {
  return {Eigen::VectorXd::Constant(n, lo), Eigen::VectorXd::Constant(n, hi)};
}

}  // namespace fixtures
