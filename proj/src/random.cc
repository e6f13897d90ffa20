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

#include "dpvfc/random.h"

#include <cmath>
#include <numbers>

#include "dpvfc/status.h"

namespace dpvfc {
namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

uint64_t HashLabel(std::string_view label) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RandomStream::RandomStream(Seed seed)
    : lo_(Mix64(seed.value ^ 0x6a09e667f3bcc908ULL)),
      hi_(Mix64(seed.value + kGolden)) {}

RandomStream RandomStream::Fork(std::string_view label) const {
  const uint64_t tag = HashLabel(label);
  return RandomStream(Mix64(lo_ ^ Mix64(tag)), Mix64(hi_ + tag * kGolden));
}

RandomStream RandomStream::Fork(uint64_t index) const {
  const uint64_t tag = Mix64(index + 0x3c6ef372fe94f82bULL);
  return RandomStream(Mix64(lo_ + tag), Mix64(hi_ ^ (tag * kGolden)));
}

uint64_t RandomStream::NextU64() {
  const uint64_t i = counter_++;
  return Mix64(Mix64(lo_ + (i + 1) * kGolden) ^ hi_);
}

double RandomStream::NextUniform() {
  return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
}

uint64_t RandomStream::NextBelow(uint64_t n) {
  CheckParameter(n > 0, "NextBelow requires n > 0");
  // Rejection sampling removes modulo bias.
  const uint64_t limit = max() - max() % n;
  uint64_t x;
  do {
    x = NextU64();
  } while (x >= limit);
  return x % n;
}

double RandomStream::NextGaussian() {
  const double u1 = NextUniform();
  const double u2 = NextUniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double RandomStream::NextLaplace(double scale) {
  CheckParameter(scale > 0.0, "Laplace scale must be positive");
  const double v = NextUniform() - 0.5;
  const double magnitude = -scale * std::log1p(-2.0 * std::fabs(v));
  return v < 0.0 ? -magnitude : magnitude;
}

uint64_t RandomStream::NextGeometric(double p) {
  CheckParameter(p > 0.0 && p <= 1.0, "geometric p must lie in (0, 1]");
  if (p == 1.0) return 1;
  const double v = std::floor(std::log(NextUniform()) / std::log1p(-p));
  if (v >= 1e18) return static_cast<uint64_t>(1e18);
  return 1 + static_cast<uint64_t>(v);
}

double LaplaceSample(double scale, Seed seed) {
  RandomStream stream(seed);
  return stream.NextLaplace(scale);
}

}  // namespace dpvfc
