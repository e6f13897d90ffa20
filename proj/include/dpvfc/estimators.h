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

#ifndef DPVFC_ESTIMATORS_H_
#define DPVFC_ESTIMATORS_H_

#include <span>
#include <utility>
#include <vector>

#include "dpvfc/matrix.h"
#include "dpvfc/random.h"
#include "dpvfc/sketch.h"
#include "dpvfc/weight_grid.h"

namespace dpvfc {

// Refinement schedule for reconciling a grid with pairwise targets. One
// sweep visits every party pair once.
struct UpdateSchedule {
  // 0 selects 200 * S^2.
  size_t sweeps = 0;
  double eta_first = 1.0;
  double eta_second = 0.5;
  // Stop once every pair's L1 residual is below tolerance * nhat.
  double tolerance = 1e-4;
  bool random_pairs = false;
  Seed seed{0};

  size_t ResolvedSweeps(size_t parties) const {
    return sweeps > 0 ? sweeps : 200 * parties * parties;
  }
};

struct RefinementStats {
  size_t sweeps_run = 0;
  // Largest L1 gap between a pair projection and its target, before the
  // final consistency step.
  double max_residual = 0.0;
  bool converged = false;
};

struct PairTarget {
  size_t l1 = 0;
  size_t l2 = 0;
  Matrix target;
};

// All unordered party pairs in lexicographic order.
std::vector<std::pair<size_t, size_t>> PartyPairs(size_t parties);

// nhat * prod_l (marginals[l][a_l] / nhat).
std::vector<double> IndependenceInit(
    double nhat, std::span<const std::vector<double>> marginals);

// Iteratively subtracts eta * (projection - target) / (cells per group) from
// every cell covered by a pair. Returns the raw tensor; intermediate
// negatives are kept.
std::vector<double> RefineGrid(std::vector<double> init,
                               std::span<const size_t> dims,
                               std::span<const PairTarget> targets,
                               double nhat, const UpdateSchedule& schedule,
                               RefinementStats* stats = nullptr);

// Unclipped intersection estimates n̂ minus the decoded union of every
// other cluster. Throws kIncompatibleSketches on mismatched parameters.
std::vector<double> BasicEstRaw(double nhat,
                                std::span<const SketchSet* const> sketches);
WeightGrid BasicEst(double nhat, std::span<const SketchSet> sketches);

// Decoded cardinality of each cluster minus phantoms, clipped at zero.
std::vector<double> SinglePartyCounts(const SketchSet& sketches);

WeightGrid TwoPhaseEst(double nhat, std::span<const SketchSet> sketches,
                       const UpdateSchedule& schedule,
                       RefinementStats* stats = nullptr);

inline constexpr double kDefaultRho = 0.649;

struct SigmaModel {
  double rho = kDefaultRho;
  size_t M = kDefaultSketchCount;
  double eps2 = 0.0;
  double delta = 0.0;
  size_t parties = 2;

  // Standard deviation of one intersection estimate built from `s`
  // sketches sets with k' clusters each.
  double Sigma(double n, double w_star, size_t s, size_t k_prime) const;
};

// k' = max{k0, ceil(k^(1/S))} clamped to [2, k_max], where k0 is the
// smallest k' at which the intersection noise reaches the average cell
// size. Throws kInvalidParameter when k_max < 2, nhat <= 0 or k < 1.
size_t AutoKPrime(double nhat, size_t k, size_t parties,
                  const SigmaModel& model, size_t k_max = 16);

}  // namespace dpvfc

#endif  // DPVFC_ESTIMATORS_H_
