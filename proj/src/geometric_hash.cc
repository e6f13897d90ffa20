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

#include "dpvfc/geometric_hash.h"

#include <cmath>
#include <cstring>
#include <set>
#include <utility>

#include "dpvfc/status.h"

namespace dpvfc {

uint64_t IdFingerprint(std::string_view id) {
  uint64_t h = 0x243f6a8885a308d3ULL ^ (id.size() * 0x9e3779b97f4a7c15ULL);
  size_t i = 0;
  for (; i + 8 <= id.size(); i += 8) {
    uint64_t word;
    std::memcpy(&word, id.data() + i, 8);
    h = Mix64(h ^ word) + 0x13198a2e03707344ULL;
  }
  uint64_t tail = 0;
  for (size_t j = 0; i + j < id.size(); ++j) {
    tail |= static_cast<uint64_t>(static_cast<unsigned char>(id[i + j]))
            << (8 * j);
  }
  return Mix64(Mix64(h ^ tail) ^ 0xa4093822299f31d0ULL);
}

uint32_t GeoValueFromRaw(uint64_t raw, double gamma) {
  const double u = (static_cast<double>(raw >> 11) + 0.5) * 0x1.0p-53;
  const double v = std::floor(-std::log(u) / std::log1p(gamma));
  if (v >= kGeoHashCap - 1) return kGeoHashCap;
  return 1 + static_cast<uint32_t>(v);
}

GeometricHash::GeometricHash(HashKey key, double gamma)
    : key_(key), gamma_(gamma) {
  CheckParameter(gamma > 0.0, "gamma must be positive");
}

uint32_t GeometricHash::operator()(std::string_view id) const {
  return FromFingerprint(IdFingerprint(id));
}

uint32_t GeometricHash::FromFingerprint(uint64_t fingerprint) const {
  return GeoValueFromRaw(KeyedHash(key_, fingerprint), gamma_);
}

uint32_t GeoHash(const GeometricHash& h, std::string_view id) { return h(id); }

std::vector<HashKey> DeriveKeys(Seed shared_seed, size_t M) {
  CheckParameter(M >= 1, "at least one hash key is required");
  RandomStream stream = RandomStream(shared_seed).Fork("hash-keys");
  std::vector<HashKey> keys;
  keys.reserve(M);
  std::set<std::pair<uint64_t, uint64_t>> seen;
  while (keys.size() < M) {
    HashKey k{stream.NextU64(), stream.NextU64()};
    if (seen.insert({k.lo, k.hi}).second) keys.push_back(k);
  }
  return keys;
}

}  // namespace dpvfc
