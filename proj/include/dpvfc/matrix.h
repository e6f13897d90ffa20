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

#ifndef DPVFC_MATRIX_H_
#define DPVFC_MATRIX_H_

#include <cstddef>
#include <span>
#include <vector>

namespace dpvfc {

// Dense row-major matrix of doubles.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(size_t i) const {
    return {data.data() + i * cols, cols};
  }
  double& operator()(size_t i, size_t j) { return data[i * cols + j]; }
  double operator()(size_t i, size_t j) const { return data[i * cols + j]; }

  bool operator==(const Matrix&) const = default;
};

inline double SquaredDistance(std::span<const double> a,
                              std::span<const double> b) {
  double d = 0.0;
  for (size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    d += diff * diff;
  }
  return d;
}

}  // namespace dpvfc

#endif  // DPVFC_MATRIX_H_
