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

#ifndef DPVFC_GEOMETRIC_HASH_H_
#define DPVFC_GEOMETRIC_HASH_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dpvfc/random.h"

namespace dpvfc {

using UserId = std::string;

// Sketch values are stored as 16-bit integers, so hash values saturate here.
inline constexpr uint32_t kGeoHashCap = 65535;

struct HashKey {
  uint64_t lo = 0;
  uint64_t hi = 0;
  bool operator==(const HashKey&) const = default;
};

// Unkeyed 64-bit digest of an id. Public and identical for every party; the
// secret lives entirely in the HashKey applied afterwards.
uint64_t IdFingerprint(std::string_view id);

// 128-bit-keyed pseudorandom function of a fingerprint.
inline uint64_t KeyedHash(const HashKey& key, uint64_t fingerprint) {
  auto mum = [](uint64_t a, uint64_t b) {
    const unsigned __int128 r = static_cast<unsigned __int128>(a) * b;
    return static_cast<uint64_t>(r) ^ static_cast<uint64_t>(r >> 64);
  };
  const uint64_t x = mum(fingerprint ^ key.lo ^ 0xa0761d6478bd642fULL,
                         key.hi ^ 0xe7037ed1a0b428dbULL);
  return mum(x ^ 0x8ebc6af09c88c6e3ULL, fingerprint ^ 0x589965cc75374cc3ULL);
}

// Maps a raw keyed hash to a geometric value with success probability
// gamma / (1 + gamma). The map is non-increasing in `raw`, so the maximum
// geometric value over a set is the value of its minimum raw hash.
uint32_t GeoValueFromRaw(uint64_t raw, double gamma);

class GeometricHash {
 public:
  GeometricHash(HashKey key, double gamma);

  uint32_t operator()(std::string_view id) const;
  uint32_t FromFingerprint(uint64_t fingerprint) const;

  const HashKey& key() const { return key_; }
  double gamma() const { return gamma_; }

 private:
  HashKey key_;
  double gamma_;
};

uint32_t GeoHash(const GeometricHash& h, std::string_view id);

// M pairwise-distinct keys, deterministic in the shared seed.
std::vector<HashKey> DeriveKeys(Seed shared_seed, size_t M);

}  // namespace dpvfc

#endif  // DPVFC_GEOMETRIC_HASH_H_
