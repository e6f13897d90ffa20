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

#include "dpvfc/metrics.h"

#include <cmath>
#include <limits>

#include "dpvfc/status.h"

namespace dpvfc {

double NormalizedLoss(const Matrix& data, const Matrix& centers) {
  CheckParameter(centers.rows > 0, "at least one center is required");
  if (centers.cols != data.cols) {
    throw Error(ErrorCode::kDimMismatch, "centers and data differ in width");
  }
  if (data.rows == 0) return 0.0;
  double total = 0.0;
  for (size_t i = 0; i < data.rows; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < centers.rows; ++c) {
      best = std::min(best, SquaredDistance(data.row(i), centers.row(c)));
    }
    total += best;
  }
  return total / static_cast<double>(data.rows);
}

double RelIntersectionError(const WeightGrid& estimated,
                            const WeightGrid& truth) {
  if (estimated.dims != truth.dims ||
      estimated.weights.size() != truth.weights.size()) {
    throw Error(ErrorCode::kDimMismatch, "grids differ in shape");
  }
  CheckParameter(truth.total > 0.0, "truth total must be positive");
  double l1 = 0.0;
  for (size_t i = 0; i < truth.weights.size(); ++i) {
    l1 += std::fabs(estimated.weights[i] - truth.weights[i]);
  }
  return l1 / truth.total;
}

}  // namespace dpvfc
