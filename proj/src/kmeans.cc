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

#include "dpvfc/kmeans.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpvfc/parallel.h"
#include "dpvfc/status.h"

namespace dpvfc {
namespace {

struct Assignment {
  std::vector<uint32_t> labels;
  std::vector<double> cost;
  double loss = 0.0;
};

Assignment Assign(const WeightedPoints& data, const Matrix& centers) {
  Assignment a;
  const size_t n = data.points.rows;
  a.labels.resize(n);
  a.cost.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    uint32_t arg = 0;
    for (size_t c = 0; c < centers.rows; ++c) {
      const double d = SquaredDistance(data.points.row(i), centers.row(c));
      if (d < best) {
        best = d;
        arg = static_cast<uint32_t>(c);
      }
    }
    a.labels[i] = arg;
    a.cost[i] = data.weights[i] * best;
    a.loss += a.cost[i];
  }
  return a;
}

void Validate(const WeightedPoints& data, size_t k) {
  CheckParameter(k >= 1, "k must be at least 1");
  if (data.weights.size() != data.points.rows) {
    throw Error(ErrorCode::kLengthMismatch, "one weight per point expected");
  }
  bool positive = false;
  for (double w : data.weights) {
    CheckParameter(w >= 0.0, "weights must be nonnegative");
    positive = positive || w > 0.0;
  }
  CheckParameter(positive, "at least one weight must be positive");
}

// Index drawn with probability proportional to mass; mass must have a
// positive sum.
size_t SampleIndex(const std::vector<double>& mass, double total,
                   RandomStream& rng) {
  double target = rng.NextUniform() * total;
  size_t last_positive = 0;
  for (size_t i = 0; i < mass.size(); ++i) {
    if (mass[i] <= 0.0) continue;
    last_positive = i;
    if (target < mass[i]) return i;
    target -= mass[i];
  }
  return last_positive;
}

}  // namespace

double WeightedLoss(const WeightedPoints& data, const Matrix& centers) {
  return Assign(data, centers).loss;
}

Matrix KMeansPlusPlus(const WeightedPoints& data, size_t k,
                      RandomStream& rng) {
  Validate(data, k);
  const size_t n = data.points.rows;
  const size_t m = data.points.cols;
  Matrix centers(k, m);
  double total_weight = 0.0;
  for (double w : data.weights) total_weight += w;
  size_t first = SampleIndex(data.weights, total_weight, rng);
  std::copy_n(data.points.row(first).begin(), m, centers.row(0).begin());
  std::vector<double> d2(n);
  for (size_t i = 0; i < n; ++i) {
    d2[i] = SquaredDistance(data.points.row(i), centers.row(0));
  }
  std::vector<double> mass(n);
  for (size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      mass[i] = data.weights[i] * d2[i];
      total += mass[i];
    }
    // Fewer distinct positive-weight points than k: fall back to weights.
    const size_t pick = total > 0.0 ? SampleIndex(mass, total, rng)
                                    : SampleIndex(data.weights, total_weight, rng);
    std::copy_n(data.points.row(pick).begin(), m, centers.row(c).begin());
    for (size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], SquaredDistance(data.points.row(i), centers.row(c)));
    }
  }
  return centers;
}

KMeansResult Lloyd(const WeightedPoints& data, Matrix centers,
                   const KMeansOptions& options) {
  Validate(data, centers.rows);
  if (centers.cols != data.points.cols) {
    throw Error(ErrorCode::kDimMismatch, "centers and points differ in width");
  }
  const size_t k = centers.rows;
  const size_t m = centers.cols;
  KMeansResult result;
  Assignment a = Assign(data, centers);
  result.init_loss = a.loss;
  result.loss_history.push_back(a.loss);
  for (size_t it = 0; it < options.iters; ++it) {
    Matrix sums(k, m);
    std::vector<double> mass(k, 0.0);
    for (size_t i = 0; i < data.points.rows; ++i) {
      const double w = data.weights[i];
      if (w <= 0.0) continue;
      mass[a.labels[i]] += w;
      auto row = data.points.row(i);
      auto s = sums.row(a.labels[i]);
      for (size_t j = 0; j < m; ++j) s[j] += w * row[j];
    }
    double shift = 0.0;
    for (size_t c = 0; c < k; ++c) {
      auto center = centers.row(c);
      if (mass[c] > 0.0) {
        double d = 0.0;
        for (size_t j = 0; j < m; ++j) {
          const double next = sums(c, j) / mass[c];
          d += (next - center[j]) * (next - center[j]);
          center[j] = next;
        }
        shift = std::max(shift, std::sqrt(d));
      } else {
        const size_t worst = static_cast<size_t>(
            std::max_element(a.cost.begin(), a.cost.end()) - a.cost.begin());
        if (a.cost[worst] <= 0.0) continue;
        auto p = data.points.row(worst);
        shift = std::max(shift, std::sqrt(SquaredDistance(p, center)));
        std::copy(p.begin(), p.end(), center.begin());
        a.cost[worst] = 0.0;
      }
    }
    a = Assign(data, centers);
    result.loss_history.push_back(a.loss);
    result.iterations = it + 1;
    if (shift < options.tolerance) break;
  }
  result.centers = std::move(centers);
  result.loss = a.loss;
  return result;
}

KMeansResult WeightedKMeans(const WeightedPoints& data, size_t k, Seed seed,
                            const KMeansOptions& options) {
  Validate(data, k);
  const size_t restarts = std::max<size_t>(1, options.restarts);
  std::vector<KMeansResult> runs(restarts);
  const RandomStream root(seed);
  ParallelFor(restarts, [&](size_t begin, size_t end) {
    for (size_t r = begin; r < end; ++r) {
      RandomStream rng = root.Fork(r);
      runs[r] = Lloyd(data, KMeansPlusPlus(data, k, rng), options);
    }
  });
  size_t best = 0;
  for (size_t r = 1; r < restarts; ++r) {
    if (runs[r].loss < runs[best].loss) best = r;
  }
  return std::move(runs[best]);
}

}  // namespace dpvfc
