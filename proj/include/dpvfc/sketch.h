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

#ifndef DPVFC_SKETCH_H_
#define DPVFC_SKETCH_H_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dpvfc/geometric_hash.h"
#include "dpvfc/matrix.h"
#include "dpvfc/random.h"

namespace dpvfc {

inline constexpr double kDefaultGamma = 1.0;
inline constexpr size_t kDefaultSketchCount = 4096;

struct SketchParams {
  size_t M = kDefaultSketchCount;
  double gamma = kDefaultGamma;
  double eps2 = 0.0;
  double delta2 = 0.0;
  // Per-sketch budget; 0 in non-private mode.
  double eps_prime = 0.0;
  uint64_t n_p = 0;
  uint32_t alpha_min = 0;
  bool non_private_mode = false;

  static SketchParams Private(size_t M, double gamma, double eps2,
                              double delta2);
  // Rebuilds the derived fields from a per-sketch budget, as carried in the
  // wire header.
  static SketchParams FromEpsPrime(size_t M, double gamma, double eps_prime);
  static SketchParams NonPrivate(size_t M, double gamma);

  // True when M, gamma and the per-sketch budget match.
  bool CompatibleWith(const SketchParams& other) const;
};

// Cluster label per user, aligned with the party's id order.
struct Partition {
  size_t k = 0;
  std::vector<uint32_t> labels;

  std::vector<size_t> Sizes() const;
};

// Nearest center per row; ties go to the lowest center index.
Partition AssignNearest(const Matrix& points, const Matrix& centers);

struct SketchSet {
  SketchParams params;
  int party = 0;
  size_t k_prime = 0;
  // M x k_prime, row-major.
  std::vector<uint16_t> values;

  uint16_t at(size_t i, size_t a) const { return values[i * k_prime + a]; }
  std::span<const uint16_t> row(size_t i) const {
    return {values.data() + i * k_prime, k_prime};
  }
  std::vector<uint16_t> Column(size_t a) const;

  bool operator==(const SketchSet& other) const {
    return party == other.party && k_prime == other.k_prime &&
           values == other.values;
  }
};

// Maximum of `count` independent geometric draws, sampled exactly through
// the inverse CDF of the maximum. Returns 0 when count is 0.
uint32_t SampleMaxGeometric(uint64_t count, double gamma, RandomStream& rng);

// One DP FM sketch of a set of fingerprints.
uint32_t Dpfm(std::span<const uint64_t> fingerprints,
              const SketchParams& params, const HashKey& key, Seed seed);
uint32_t Dpfm(std::span<const UserId> ids, const SketchParams& params,
              const HashKey& key, Seed seed);

// Sketches every cluster of a partition under each of the M keys.
SketchSet SketchPartition(std::span<const uint64_t> fingerprints,
                          const Partition& partition,
                          const SketchParams& params,
                          std::span<const HashKey> keys, Seed seed,
                          int party = 0);

// Partitions the party's rows by nearest local center and sketches the
// clusters. Throws kInvalidParameter when there are fewer than two centers.
SketchSet DpfmpsGen(std::span<const UserId> ids, const Matrix& points,
                    const Matrix& centers, const SketchParams& params,
                    std::span<const HashKey> keys, Seed seed, int party = 0);

// Precomputed (1+gamma)^-v terms for fast harmonic decoding.
class HarmonicDecoder {
 public:
  HarmonicDecoder(double gamma, double xi);

  double Term(uint32_t v) const {
    return v < table_.size() ? table_[v] : std::pow(1.0 + gamma_, -double(v));
  }
  // xi * M / sum, where sum accumulates Term() over M sketch values.
  double Estimate(double term_sum, size_t M) const {
    return xi_ * static_cast<double>(M) / term_sum;
  }
  double Decode(std::span<const uint16_t> column) const;

  double xi() const { return xi_; }

 private:
  double gamma_;
  double xi_;
  std::vector<double> table_;
};

double HarmonicDecode(std::span<const uint16_t> column, double gamma);
double HarmonicDecode(std::span<const uint16_t> column, double gamma,
                      double xi);

// Debias constant for the harmonic decoder, cached by gamma and the
// power-of-two bucket containing M.
double CalibrateXi(double gamma, size_t M);
double CalibrateXiUncached(double gamma, size_t M);
size_t XiBucket(size_t M);

// Mean of (M / sum of (1+gamma)^-V) / N over `trials` simulated sketches of
// a set of cardinality N, using stratified uniforms. Exposed for testing
// and for the calibrate command.
double MeanHarmonicRatio(double gamma, size_t M, double N, size_t trials,
                         Seed seed);

// Wire format, all fields little-endian 8-byte:
//   party (u64), M (u64), k' (u64), gamma (f64), eps' (f64, 0 if
//   non-private), then M * k' values (u64), row-major.
inline constexpr size_t kSketchHeaderBytes = 40;
std::vector<uint8_t> SerializeSketchSet(const SketchSet& sketches);
SketchSet DeserializeSketchSet(std::span<const uint8_t> bytes);

}  // namespace dpvfc

#endif  // DPVFC_SKETCH_H_
