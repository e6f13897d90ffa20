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

#ifndef DPVFC_LOCAL_CLUSTERING_H_
#define DPVFC_LOCAL_CLUSTERING_H_

#include <optional>

#include "dpvfc/kmeans.h"
#include "dpvfc/matrix.h"
#include "dpvfc/privacy.h"
#include "dpvfc/random.h"
#include "dpvfc/sketch.h"

namespace dpvfc {

struct LocalModel {
  Matrix centers;
  Partition partition;
};

struct DplsfOptions {
  // Number of SimHash hyperplanes, which is also the maximum trie depth.
  size_t depth = 20;
  // Share of eps1 spent on trie counts; the rest pays for leaf sums.
  double count_fraction = 0.5;
  KMeansOptions kmeans;
};

struct DplsfDiagnostics {
  double sigma = 0.0;
  double theta = 0.0;
  size_t leaves = 0;
  size_t max_depth = 0;
  bool degenerate = false;
};

// min{10 sigma sqrt(m), floor(n / (2 k'))}.
double DplsfTheta(double sigma, size_t m, double n, size_t k_prime);

// Private local clustering over a noisy SimHash trie. Falls back to k'
// uniform random centers when no leaf keeps a positive noisy count.
LocalModel Dplsf(const Matrix& data, size_t k_prime, double eps1, Seed seed,
                 const DplsfOptions& options = {},
                 PrivacyLedger* ledger = nullptr, int party = 0,
                 DplsfDiagnostics* diagnostics = nullptr);

struct DplloydOptions {
  size_t iters = 5;
  // Starting centers; uniform random in [-1, 1]^m when absent.
  std::optional<Matrix> init;
};

LocalModel Dplloyd(const Matrix& data, size_t k_prime, double eps1, Seed seed,
                   const DplloydOptions& options = {},
                   PrivacyLedger* ledger = nullptr, int party = 0);

// Plain k-means with unit weights; used by the non-private pipeline.
LocalModel NonPrivateLocal(const Matrix& data, size_t k_prime, Seed seed,
                           const KMeansOptions& options = {});

// Centers clamped coordinate-wise to [-1, 1].
void ClampCenters(Matrix& centers);

}  // namespace dpvfc

#endif  // DPVFC_LOCAL_CLUSTERING_H_
