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

#ifndef DPVFC_KMEANS_H_
#define DPVFC_KMEANS_H_

#include <vector>

#include "dpvfc/matrix.h"
#include "dpvfc/random.h"

namespace dpvfc {

struct WeightedPoints {
  Matrix points;
  std::vector<double> weights;
};

struct KMeansOptions {
  size_t iters = 100;
  size_t restarts = 5;
  // Lloyd stops once no center moves farther than this.
  double tolerance = 1e-6;
};

struct KMeansResult {
  Matrix centers;
  double loss = 0.0;
  double init_loss = 0.0;
  // Weighted loss after each assignment step.
  std::vector<double> loss_history;
  size_t iterations = 0;
};

// Sum over points of weight times squared distance to the nearest center.
double WeightedLoss(const WeightedPoints& data, const Matrix& centers);

// Weighted D^2 seeding.
Matrix KMeansPlusPlus(const WeightedPoints& data, size_t k, RandomStream& rng);

// Weighted Lloyd iterations from the given centers. Empty clusters are
// re-seeded at the point with the largest weighted cost.
KMeansResult Lloyd(const WeightedPoints& data, Matrix centers,
                   const KMeansOptions& options);

// Best of options.restarts seeded runs. Throws kInvalidParameter when k is
// zero or no weight is positive.
KMeansResult WeightedKMeans(const WeightedPoints& data, size_t k, Seed seed,
                            const KMeansOptions& options = {});

}  // namespace dpvfc

#endif  // DPVFC_KMEANS_H_
