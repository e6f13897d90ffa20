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

#ifndef DPVFC_RANDOM_H_
#define DPVFC_RANDOM_H_

#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <string_view>

namespace dpvfc {

struct Seed {
  uint64_t value = 0;
  bool operator==(const Seed&) const = default;
};

// SplitMix64 finalizer. Bijective on 64-bit words.
inline uint64_t Mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// 64-bit FNV-1a, used only to turn fork labels into stream keys.
uint64_t HashLabel(std::string_view label);

// Counter-mode keyed generator. The output for position i is a keyed mix of
// i, so child streams derived with Fork() are independent of the order in
// which streams are consumed. Satisfies std::uniform_random_bit_generator.
class RandomStream {
 public:
  using result_type = uint64_t;

  explicit RandomStream(Seed seed);

  RandomStream Fork(std::string_view label) const;
  RandomStream Fork(uint64_t index) const;

  uint64_t NextU64();
  // Uniform in the open interval (0, 1).
  double NextUniform();
  // Uniform integer in [0, n). n must be positive.
  uint64_t NextBelow(uint64_t n);
  double NextGaussian();
  // Zero-mean Laplace with the given scale, by inverse CDF.
  double NextLaplace(double scale);
  // Geometric on {1, 2, ...} with success probability p.
  uint64_t NextGeometric(double p);

  // A fresh seed drawn from this stream, for APIs that take a Seed.
  Seed NextSeed() { return Seed{NextU64()}; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return NextU64(); }

 private:
  RandomStream(uint64_t lo, uint64_t hi) : lo_(lo), hi_(hi) {}

  uint64_t lo_;
  uint64_t hi_;
  uint64_t counter_ = 0;
};

// Fisher-Yates shuffle driven by NextBelow, so the permutation does not
// depend on the standard library's distribution implementations.
template <typename T>
void Shuffle(std::span<T> items, RandomStream& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rng.NextBelow(i)]);
  }
}

// One Laplace draw with the given scale. Throws kInvalidParameter when
// scale <= 0.
double LaplaceSample(double scale, Seed seed);

}  // namespace dpvfc

#endif  // DPVFC_RANDOM_H_
