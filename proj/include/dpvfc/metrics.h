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

#ifndef DPVFC_METRICS_H_
#define DPVFC_METRICS_H_

#include "dpvfc/matrix.h"
#include "dpvfc/weight_grid.h"

namespace dpvfc {

// Mean over rows of the squared distance to the nearest center. Throws
// kInvalidParameter when there are no centers, kDimMismatch on width.
double NormalizedLoss(const Matrix& data, const Matrix& centers);

// (1 / n) * sum |w - w*|, with n the truth total. Throws kDimMismatch when
// the grids differ in shape.
double RelIntersectionError(const WeightGrid& estimated,
                            const WeightGrid& truth);

}  // namespace dpvfc

#endif  // DPVFC_METRICS_H_
