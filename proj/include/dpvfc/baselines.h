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

#ifndef DPVFC_BASELINES_H_
#define DPVFC_BASELINES_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpvfc/estimators.h"
#include "dpvfc/random.h"
#include "dpvfc/sketch.h"
#include "dpvfc/weight_grid.h"

namespace dpvfc {

struct NoisyHistogram {
  std::vector<double> counts;
  double eps2 = 0.0;
};

// Per-cluster counts plus Laplace(1/eps2) noise. An infinite eps2 gives the
// exact histogram.
NoisyHistogram MakeNoisyHistogram(const Partition& partition, double eps2,
                                  Seed seed);

// Product-of-marginals grid, made consistent with nhat.
WeightGrid IndLap(double nhat, std::span<const NoisyHistogram> histograms);

enum class LdpKind { kGrr, kOlh };

struct LdpReport {
  LdpKind kind = LdpKind::kGrr;
  // Per-user hash seed; only meaningful for OLH.
  uint64_t seed = 0;
  uint32_t value = 0;

  bool operator==(const LdpReport&) const = default;
};

// Frequency-oracle parameters. For GRR, p and q are the report
// probabilities of the true and of each other index; for OLH they are the
// probabilities that the true and any other index fall in the support.
struct LdpMechanism {
  LdpKind kind = LdpKind::kGrr;
  size_t k_prime = 0;
  double eps2 = 0.0;
  // OLH hash domain size; equals k_prime under GRR.
  uint32_t domain = 0;
  double p = 0.0;
  double q = 0.0;

  static LdpMechanism Select(size_t k_prime, double eps2);
};

uint32_t OlhHash(uint64_t seed, uint32_t value, uint32_t domain);

// Throws kInvalidParameter when k' < 2.
LdpReport LdpEncode(uint32_t partition_index, size_t k_prime, double eps2,
                    Seed seed);
std::vector<LdpReport> LdpEncodeAll(std::span<const uint32_t> labels,
                                    size_t k_prime, double eps2, Seed seed);

// Indices whose hashed (or raw) value matches the report.
std::vector<uint32_t> LdpSupport(const LdpReport& report,
                                 const LdpMechanism& mech);

// Joint support counts over the grid, then the per-party inverse of the
// transition matrix applied along every axis. Unclipped, hence unbiased.
// Throws kSingularTransition when p == q.
std::vector<double> LdpDecodeRaw(
    std::span<const std::vector<LdpReport>> reports, double eps2,
    size_t k_prime);
WeightGrid LdpDecode(double nhat,
                     std::span<const std::vector<LdpReport>> reports,
                     double eps2, size_t k_prime);

// Pairwise decodes as targets, refined from independence.
WeightGrid LdpAgg2PEst(double nhat,
                       std::span<const std::vector<LdpReport>> reports,
                       double eps2, size_t k_prime,
                       const UpdateSchedule& schedule,
                       RefinementStats* stats = nullptr);

// One JSON object per line: {"party", "user", "kind", "seed"?, "value"}.
std::string LdpReportsToJsonl(int party, std::span<const LdpReport> reports);
std::vector<LdpReport> LdpReportsFromJsonl(const std::string& text,
                                           int* party = nullptr);

}  // namespace dpvfc

#endif  // DPVFC_BASELINES_H_
