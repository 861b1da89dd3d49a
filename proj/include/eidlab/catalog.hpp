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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eidlab/systems.hpp"

namespace eid {

using Json = nlohmann::json;

/// ℓ(x, x̄) used by certificates with a known closed form.
using PairMap = std::function<Vector(const Vector& x, const Vector& xbar)>;

/// A catalog system together with the storage and certificate pieces the
/// family is known to admit.
struct CatalogEntry {
  System system;
  std::optional<StorageGenerator> storage;
  std::optional<Matrix> W;
  PairMap ell;
  std::optional<Matrix> P;  // discrete-time quadratic storage weight
  std::optional<SeparablePotential> potential;
  Json params;  // resolved, defaults filled in
};

[[nodiscard]] const std::vector<std::string>& catalog_names();

/// Throws UnknownSystem, MissingParam, DimensionMismatch or Schema.
[[nodiscard]] CatalogEntry catalog_entry(const std::string& name, const Json& params);
[[nodiscard]] System catalog_build(const std::string& name, const Json& params);

/// {"schema": 1, "family": ..., "params": {...}}
[[nodiscard]] CatalogEntry load_system(const Json& doc);
[[nodiscard]] CatalogEntry load_system_file(const std::string& path);

/// Matrix and vector conversions for row-major nested arrays. A bare number
/// reads as a 1x1 matrix.
[[nodiscard]] Matrix json_to_matrix(const Json& j, const std::string& what);
[[nodiscard]] Vector json_to_vector(const Json& j, const std::string& what);
[[nodiscard]] Json matrix_to_json(const Matrix& A);
[[nodiscard]] Json vector_to_json(const Vector& v);

}  // namespace eid
