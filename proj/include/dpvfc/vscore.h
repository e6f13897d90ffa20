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

#ifndef DPVFC_VSCORE_H_
#define DPVFC_VSCORE_H_

#include <cstdint>
#include <span>

namespace dpvfc {

struct VScoreResult {
  double homogeneity = 1.0;
  double completeness = 1.0;
  double v = 1.0;
};

// Homogeneity, completeness and their harmonic mean, with natural-log
// entropies. Throws kLengthMismatch when the labelings differ in length and
// kInvalidParameter when they are empty.
VScoreResult VScoreDetail(std::span<const uint32_t> labels_true,
                          std::span<const uint32_t> labels_pred);
double VScore(std::span<const uint32_t> labels_true,
              std::span<const uint32_t> labels_pred);

}  // namespace dpvfc

#endif  // DPVFC_VSCORE_H_
