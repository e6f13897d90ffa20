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

#include "dpvfc/sketch.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <utility>

#include "dpvfc/bytes.h"
#include "dpvfc/parallel.h"
#include "dpvfc/status.h"

namespace dpvfc {
namespace {

// Ceiling that forgives a few ulps of rounding above an exact integer, so
// that closed-form values like 1 / (e^{ln 2} - 1) land on 1 and not 2.
double TolerantCeil(double x) {
  return std::ceil(x - 1e-9 * std::max(1.0, std::fabs(x)));
}

// Inverse CDF of the maximum of `count` geometric draws on {1, 2, ...} with
// P(X > z) = (1 + gamma)^-z.
double MaxGeometricFromUniform(double u, double count, double log1p_gamma) {
  const double tail = -std::expm1(std::log(u) / count);
  const double z = std::ceil(-std::log(tail) / log1p_gamma);
  return std::max(1.0, z);
}

uint16_t ClampToCap(double v) {
  return static_cast<uint16_t>(std::min<double>(v, kGeoHashCap));
}

}  // namespace

SketchParams SketchParams::Private(size_t M, double gamma, double eps2,
                                   double delta2) {
  CheckParameter(M >= 1, "M must be at least 1");
  CheckParameter(eps2 > 0.0, "eps2 must be positive");
  CheckParameter(delta2 > 0.0 && delta2 < 1.0, "delta2 must lie in (0, 1)");
  const double eps_prime =
      eps2 / (4.0 * std::sqrt(static_cast<double>(M) * std::log(1.0 / delta2)));
  SketchParams p = FromEpsPrime(M, gamma, eps_prime);
  p.eps2 = eps2;
  p.delta2 = delta2;
  return p;
}

SketchParams SketchParams::FromEpsPrime(size_t M, double gamma,
                                        double eps_prime) {
  CheckParameter(M >= 1, "M must be at least 1");
  CheckParameter(gamma > 0.0, "gamma must be positive");
  CheckParameter(eps_prime > 0.0, "eps' must be positive");
  SketchParams p;
  p.M = M;
  p.gamma = gamma;
  p.eps_prime = eps_prime;
  p.n_p = static_cast<uint64_t>(TolerantCeil(1.0 / std::expm1(eps_prime)));
  const double floor_arg = -1.0 / std::expm1(-eps_prime);
  p.alpha_min = static_cast<uint32_t>(
      std::max(0.0, TolerantCeil(std::log(floor_arg) / std::log1p(gamma))));
  p.non_private_mode = false;
  return p;
}

SketchParams SketchParams::NonPrivate(size_t M, double gamma) {
  CheckParameter(M >= 1, "M must be at least 1");
  CheckParameter(gamma > 0.0, "gamma must be positive");
  SketchParams p;
  p.M = M;
  p.gamma = gamma;
  p.non_private_mode = true;
  return p;
}

bool SketchParams::CompatibleWith(const SketchParams& other) const {
  return M == other.M && gamma == other.gamma &&
         non_private_mode == other.non_private_mode &&
         eps_prime == other.eps_prime;
}

std::vector<size_t> Partition::Sizes() const {
  std::vector<size_t> sizes(k, 0);
  for (uint32_t l : labels) ++sizes[l];
  return sizes;
}

Partition AssignNearest(const Matrix& points, const Matrix& centers) {
  if (centers.rows == 0) {
    throw Error(ErrorCode::kInvalidParameter, "no centers to assign to");
  }
  if (points.cols != centers.cols) {
    throw Error(ErrorCode::kDimMismatch, "points and centers differ in width");
  }
  Partition p;
  p.k = centers.rows;
  p.labels.resize(points.rows);
  ParallelFor(points.rows, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      double best = std::numeric_limits<double>::infinity();
      uint32_t arg = 0;
      for (size_t c = 0; c < centers.rows; ++c) {
        const double d = SquaredDistance(points.row(i), centers.row(c));
        if (d < best) {
          best = d;
          arg = static_cast<uint32_t>(c);
        }
      }
      p.labels[i] = arg;
    }
  }, 1024);
  return p;
}

std::vector<uint16_t> SketchSet::Column(size_t a) const {
  std::vector<uint16_t> col(params.M);
  for (size_t i = 0; i < params.M; ++i) col[i] = at(i, a);
  return col;
}

uint32_t SampleMaxGeometric(uint64_t count, double gamma, RandomStream& rng) {
  if (count == 0) return 0;
  const double z = MaxGeometricFromUniform(
      rng.NextUniform(), static_cast<double>(count), std::log1p(gamma));
  return ClampToCap(z);
}

uint32_t Dpfm(std::span<const uint64_t> fingerprints,
              const SketchParams& params, const HashKey& key, Seed seed) {
  uint64_t min_raw = std::numeric_limits<uint64_t>::max();
  for (uint64_t fp : fingerprints) min_raw = std::min(min_raw, KeyedHash(key, fp));
  const uint32_t alpha_real =
      fingerprints.empty() ? 0 : GeoValueFromRaw(min_raw, params.gamma);
  if (params.non_private_mode) return alpha_real;
  RandomStream rng(seed);
  const uint32_t alpha_p = SampleMaxGeometric(params.n_p, params.gamma, rng);
  return std::max({alpha_p, alpha_real, params.alpha_min});
}

uint32_t Dpfm(std::span<const UserId> ids, const SketchParams& params,
              const HashKey& key, Seed seed) {
  std::vector<uint64_t> fps(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) fps[i] = IdFingerprint(ids[i]);
  return Dpfm(fps, params, key, seed);
}

SketchSet SketchPartition(std::span<const uint64_t> fingerprints,
                          const Partition& partition,
                          const SketchParams& params,
                          std::span<const HashKey> keys, Seed seed,
                          int party) {
  CheckParameter(partition.k >= 2, "partition sketches need k' >= 2");
  if (keys.size() != params.M) {
    throw Error(ErrorCode::kLengthMismatch, "expected one hash key per sketch");
  }
  if (partition.labels.size() != fingerprints.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "partition labels do not match the id list");
  }
  const size_t k = partition.k;
  SketchSet out;
  out.params = params;
  out.party = party;
  out.k_prime = k;
  out.values.assign(params.M * k, 0);
  const RandomStream root(seed);
  ParallelFor(params.M, [&](size_t begin, size_t end) {
    std::vector<uint64_t> min_raw(k);
    std::vector<bool> nonempty(k);
    for (size_t i = begin; i < end; ++i) {
      std::fill(min_raw.begin(), min_raw.end(),
                std::numeric_limits<uint64_t>::max());
      std::fill(nonempty.begin(), nonempty.end(), false);
      const HashKey key = keys[i];
      for (size_t j = 0; j < fingerprints.size(); ++j) {
        const uint32_t a = partition.labels[j];
        const uint64_t h = KeyedHash(key, fingerprints[j]);
        if (h < min_raw[a]) min_raw[a] = h;
        nonempty[a] = true;
      }
      RandomStream rng = root.Fork(i);
      for (size_t a = 0; a < k; ++a) {
        uint32_t v = nonempty[a] ? GeoValueFromRaw(min_raw[a], params.gamma) : 0;
        if (!params.non_private_mode) {
          v = std::max({v, SampleMaxGeometric(params.n_p, params.gamma, rng),
                        params.alpha_min});
        }
        out.values[i * k + a] = ClampToCap(v);
      }
    }
  }, 16);
  return out;
}

SketchSet DpfmpsGen(std::span<const UserId> ids, const Matrix& points,
                    const Matrix& centers, const SketchParams& params,
                    std::span<const HashKey> keys, Seed seed, int party) {
  CheckParameter(centers.rows >= 2, "partition sketches need k' >= 2");
  if (ids.size() != points.rows) {
    throw Error(ErrorCode::kLengthMismatch, "ids and rows differ in count");
  }
  const Partition partition = AssignNearest(points, centers);
  std::vector<uint64_t> fps(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) fps[i] = IdFingerprint(ids[i]);
  return SketchPartition(fps, partition, params, keys, seed, party);
}

HarmonicDecoder::HarmonicDecoder(double gamma, double xi)
    : gamma_(gamma), xi_(xi), table_(1024) {
  CheckParameter(gamma > 0.0, "gamma must be positive");
  for (size_t v = 0; v < table_.size(); ++v) {
    table_[v] = std::pow(1.0 + gamma, -static_cast<double>(v));
  }
}

double HarmonicDecoder::Decode(std::span<const uint16_t> column) const {
  CheckParameter(!column.empty(), "cannot decode an empty column");
  double sum = 0.0;
  for (uint16_t v : column) sum += Term(v);
  return Estimate(sum, column.size());
}

double HarmonicDecode(std::span<const uint16_t> column, double gamma) {
  return HarmonicDecode(column, gamma, CalibrateXi(gamma, column.size()));
}

double HarmonicDecode(std::span<const uint16_t> column, double gamma,
                      double xi) {
  return HarmonicDecoder(gamma, xi).Decode(column);
}

size_t XiBucket(size_t M) { return std::bit_ceil(std::max<size_t>(M, 1)); }

double MeanHarmonicRatio(double gamma, size_t M, double N, size_t trials,
                         Seed seed) {
  CheckParameter(M >= 1 && trials >= 1 && N >= 1.0,
                 "calibration needs M, trials and N positive");
  const size_t total = M * trials;
  RandomStream rng(seed);
  // Latin hypercube over the pooled draws: one uniform per stratum, strata
  // assigned to draws in random order.
  std::vector<uint32_t> strata(total);
  std::iota(strata.begin(), strata.end(), 0u);
  Shuffle(std::span<uint32_t>(strata), rng);
  const double log1p_gamma = std::log1p(gamma);
  double acc = 0.0;
  for (size_t t = 0; t < trials; ++t) {
    double sum = 0.0;
    for (size_t i = 0; i < M; ++i) {
      const double u =
          (strata[t * M + i] + rng.NextUniform()) / static_cast<double>(total);
      const double v = MaxGeometricFromUniform(u, N, log1p_gamma);
      sum += std::exp(-v * log1p_gamma);
    }
    acc += static_cast<double>(M) / sum / N;
  }
  return acc / static_cast<double>(trials);
}

double CalibrateXiUncached(double gamma, size_t M) {
  CheckParameter(gamma > 0.0, "gamma must be positive");
  const size_t bucket = XiBucket(M);
  const size_t trials = std::max<size_t>(16, (size_t{1} << 20) / bucket);
  // N = 10^3, 10^3.5, ..., 10^6. Below about 10^3 the ratio drifts upward
  // by up to 1%, and including it would bias every realistic union size.
  constexpr int kGridPoints = 7;
  std::vector<double> ratios(kGridPoints);
  ParallelFor(kGridPoints, [&](size_t begin, size_t end) {
    for (size_t g = begin; g < end; ++g) {
      const double N = std::round(std::pow(10.0, 3.0 + 0.5 * g));
      const Seed seed{Mix64(0x5eedca1bULL + g * 0x9e3779b97f4a7c15ULL) ^
                      std::bit_cast<uint64_t>(gamma) ^ bucket};
      ratios[g] = MeanHarmonicRatio(gamma, bucket, N, trials, seed);
    }
  });
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  // Minimax choice: equalizes the worst relative bias at both ends.
  return 2.0 / (*lo + *hi);
}

double CalibrateXi(double gamma, size_t M) {
  static std::mutex mu;
  static std::map<std::pair<double, size_t>, double> cache;
  const auto key = std::make_pair(gamma, XiBucket(M));
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const double xi = CalibrateXiUncached(gamma, M);
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, xi);
  return xi;
}

std::vector<uint8_t> SerializeSketchSet(const SketchSet& sketches) {
  ByteWriter w;
  w.Reserve(kSketchHeaderBytes + 8 * sketches.values.size());
  w.PutU64(static_cast<uint64_t>(sketches.party));
  w.PutU64(sketches.params.M);
  w.PutU64(sketches.k_prime);
  w.PutF64(sketches.params.gamma);
  w.PutF64(sketches.params.non_private_mode ? 0.0 : sketches.params.eps_prime);
  for (uint16_t v : sketches.values) w.PutU64(v);
  return w.Take();
}

SketchSet DeserializeSketchSet(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  SketchSet s;
  s.party = static_cast<int>(r.GetU64());
  const uint64_t M = r.GetU64();
  s.k_prime = r.GetU64();
  const double gamma = r.GetF64();
  const double eps_prime = r.GetF64();
  if (M == 0 || s.k_prime == 0 || !(gamma > 0.0) ||
      r.remaining() != 8 * M * s.k_prime) {
    throw Error(ErrorCode::kParseError, "malformed sketch payload");
  }
  s.params = eps_prime > 0.0 ? SketchParams::FromEpsPrime(M, gamma, eps_prime)
                             : SketchParams::NonPrivate(M, gamma);
  s.values.resize(M * s.k_prime);
  for (auto& v : s.values) {
    const uint64_t x = r.GetU64();
    if (x > kGeoHashCap) {
      throw Error(ErrorCode::kParseError, "sketch value exceeds the cap");
    }
    v = static_cast<uint16_t>(x);
  }
  return s;
}

}  // namespace dpvfc
