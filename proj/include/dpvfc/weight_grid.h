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

#ifndef DPVFC_WEIGHT_GRID_H_
#define DPVFC_WEIGHT_GRID_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpvfc/matrix.h"

namespace dpvfc {

// Weights over the Cartesian product of every party's local centers.
// Flattened row-major with party 0 as the most significant index.
struct WeightGrid {
  std::vector<size_t> dims;
  double total = 0.0;
  std::vector<double> weights;

  static WeightGrid Zeros(std::vector<size_t> dims, double total);

  size_t parties() const { return dims.size(); }
  size_t size() const { return weights.size(); }
  size_t FlatIndex(std::span<const size_t> tuple) const;
  std::vector<size_t> Tuple(size_t flat) const;

  // {"dims": [...], "total": t, "weights": [...]}
  std::string ToJson() const;
  static WeightGrid FromJson(const std::string& text);

  bool operator==(const WeightGrid&) const = default;
};

size_t GridSize(std::span<const size_t> dims);

// Clips negatives, then rescales to `total`; an all-zero tensor becomes
// uniform. Throws kInvalidParameter unless total > 0.
WeightGrid EnforceConsistency(std::span<const double> raw,
                              std::vector<size_t> dims, double total);

// Two-party marginal of the grid: entry (a, b) sums every cell whose l1-th
// index is a and l2-th index is b.
Matrix ProjectPair(const WeightGrid& grid, size_t l1, size_t l2);

// Exact cell counts of the joint partition, from per-party labels aligned
// by user.
WeightGrid TruthGrid(std::span<const std::vector<uint32_t>> labels,
                     std::vector<size_t> dims);

}  // namespace dpvfc

#endif  // DPVFC_WEIGHT_GRID_H_
