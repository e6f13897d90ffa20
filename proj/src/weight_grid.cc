// Copyright 2026 The dpvfc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpvfc/weight_grid.h"

#include <json.hpp>

#include "dpvfc/status.h"

namespace dpvfc {

size_t GridSize(std::span<const size_t> dims) {
  size_t n = 1;
  for (size_t d : dims) n *= d;
  return n;
}

WeightGrid WeightGrid::Zeros(std::vector<size_t> dims, double total) {
  WeightGrid g;
  g.weights.assign(GridSize(dims), 0.0);
  g.dims = std::move(dims);
  g.total = total;
  return g;
}

size_t WeightGrid::FlatIndex(std::span<const size_t> tuple) const {
  if (tuple.size() != dims.size()) {
    throw Error(ErrorCode::kDimMismatch, "index tuple has the wrong arity");
  }
  size_t flat = 0;
  for (size_t l = 0; l < dims.size(); ++l) flat = flat * dims[l] + tuple[l];
  return flat;
}

std::vector<size_t> WeightGrid::Tuple(size_t flat) const {
  std::vector<size_t> tuple(dims.size());
  for (size_t l = dims.size(); l-- > 0;) {
    tuple[l] = flat % dims[l];
    flat /= dims[l];
  }
  return tuple;
}

std::string WeightGrid::ToJson() const {
  nlohmann::json j;
  j["dims"] = dims;
  j["total"] = total;
  j["weights"] = weights;
  return j.dump();
}

WeightGrid WeightGrid::FromJson(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    WeightGrid g;
    g.dims = j.at("dims").get<std::vector<size_t>>();
    g.total = j.at("total").get<double>();
    g.weights = j.at("weights").get<std::vector<double>>();
    if (g.weights.size() != GridSize(g.dims)) {
      throw Error(ErrorCode::kParseError, "weights do not match dims");
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

WeightGrid EnforceConsistency(std::span<const double> raw,
                              std::vector<size_t> dims, double total) {
  CheckParameter(total > 0.0, "consistency target must be positive");
  if (raw.size() != GridSize(dims)) {
    throw Error(ErrorCode::kDimMismatch, "tensor size does not match dims");
  }
  WeightGrid g;
  g.dims = std::move(dims);
  g.total = total;
  g.weights.resize(raw.size());
  double sum = 0.0;
  for (size_t i = 0; i < raw.size(); ++i) {
    g.weights[i] = raw[i] > 0.0 ? raw[i] : 0.0;
    sum += g.weights[i];
  }
  if (sum > 0.0) {
    const double scale = total / sum;
    for (double& w : g.weights) w *= scale;
  } else {
    const double uniform = total / static_cast<double>(raw.size());
    for (double& w : g.weights) w = uniform;
  }
  return g;
}

Matrix ProjectPair(const WeightGrid& grid, size_t l1, size_t l2) {
  CheckParameter(l1 != l2, "projection needs two distinct parties");
  CheckParameter(l1 < grid.parties() && l2 < grid.parties(),
                 "party index out of range");
  Matrix out(grid.dims[l1], grid.dims[l2]);
  // Strides of the two axes in the flattened layout.
  size_t stride1 = 1, stride2 = 1;
  for (size_t l = grid.parties(); l-- > 0;) {
    if (l > l1) stride1 *= grid.dims[l];
    if (l > l2) stride2 *= grid.dims[l];
  }
  for (size_t flat = 0; flat < grid.size(); ++flat) {
    const size_t a1 = (flat / stride1) % grid.dims[l1];
    const size_t a2 = (flat / stride2) % grid.dims[l2];
    out(a1, a2) += grid.weights[flat];
  }
  return out;
}

WeightGrid TruthGrid(std::span<const std::vector<uint32_t>> labels,
                     std::vector<size_t> dims) {
  if (labels.size() != dims.size()) {
    throw Error(ErrorCode::kDimMismatch, "one label list per party expected");
  }
  const size_t n = labels.empty() ? 0 : labels[0].size();
  for (const auto& l : labels) {
    if (l.size() != n) {
      throw Error(ErrorCode::kLengthMismatch, "label lists differ in length");
    }
  }
  WeightGrid g = WeightGrid::Zeros(std::move(dims), static_cast<double>(n));
  for (size_t u = 0; u < n; ++u) {
    size_t flat = 0;
    for (size_t l = 0; l < labels.size(); ++l) {
      flat = flat * g.dims[l] + labels[l][u];
    }
    g.weights[flat] += 1.0;
  }
  return g;
}

}  // namespace dpvfc
