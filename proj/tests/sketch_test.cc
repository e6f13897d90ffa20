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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dpvfc/geometric_hash.h"
#include "dpvfc/random.h"
#include "dpvfc/sketch.h"
#include "dpvfc/status.h"
#include "test_util.h"

namespace dpvfc {
namespace {

using ::dpvfc::testing::MakeIds;

// Exact sampler for the maximum of N Geometric(gamma / (1 + gamma)) values:
// P(max <= v) = (1 - (1 + gamma)^-v)^N, inverted by a linear scan.
uint32_t OracleMaxGeometric(double N, double gamma, double u) {
  for (uint32_t v = 1;; ++v) {
    if (std::pow(1.0 - std::pow(1.0 + gamma, -double(v)), N) >= u) return v;
  }
}

TEST(SketchParamsTest, LnTwoGivesOnePhantomAndFloorOne) {
  const SketchParams p = SketchParams::FromEpsPrime(16, 1.0, std::log(2.0));
  EXPECT_EQ(p.n_p, 1u);
  EXPECT_EQ(p.alpha_min, 1u);
}

TEST(SketchParamsTest, PrivateDerivesEpsPrime) {
  const SketchParams p = SketchParams::Private(4096, 1.0, 0.245, 5e-6);
  const double expected = 0.245 / (4.0 * std::sqrt(4096.0 * std::log(2e5)));
  EXPECT_NEAR(p.eps_prime, expected, 1e-15);
  EXPECT_EQ(p.n_p, static_cast<uint64_t>(std::ceil(1.0 / std::expm1(expected))));
  EXPECT_FALSE(p.non_private_mode);
  EXPECT_TRUE(p.CompatibleWith(SketchParams::FromEpsPrime(4096, 1.0, expected)));
  EXPECT_FALSE(p.CompatibleWith(SketchParams::NonPrivate(4096, 1.0)));
}

TEST(DpfmTest, SingleIdEqualsItsHash) {
  const HashKey key{11, 22};
  const SketchParams p = SketchParams::NonPrivate(1, 1.0);
  const std::vector<UserId> ids = {"a"};
  EXPECT_EQ(Dpfm(std::span<const UserId>(ids), p, key, Seed{0}),
            GeometricHash(key, 1.0)("a"));
}

TEST(DpfmTest, MaxMergeOfDisjointSets) {
  const SketchParams p = SketchParams::NonPrivate(1, 1.0);
  RandomStream rng(Seed{3});
  for (int trial = 0; trial < 50; ++trial) {
    const HashKey key{rng.NextU64(), rng.NextU64()};
    const auto all = MakeIds(1 + rng.NextBelow(60), "t" + std::to_string(trial));
    const size_t cut = rng.NextBelow(all.size() + 1);
    const std::vector<UserId> a(all.begin(), all.begin() + cut);
    const std::vector<UserId> b(all.begin() + cut, all.end());
    const uint32_t sa = Dpfm(std::span<const UserId>(a), p, key, Seed{0});
    const uint32_t sb = Dpfm(std::span<const UserId>(b), p, key, Seed{0});
    const uint32_t su = Dpfm(std::span<const UserId>(all), p, key, Seed{0});
    EXPECT_EQ(su, std::max(sa, sb));
    EXPECT_GE(su, sa);  // Adding ids never lowers the sketch.
  }
}

TEST(DpfmTest, PrivateSketchRespectsFloor) {
  const SketchParams p = SketchParams::FromEpsPrime(1, 1.0, 0.01);
  const std::vector<UserId> none;
  for (uint64_t s = 0; s < 200; ++s) {
    EXPECT_GE(Dpfm(std::span<const UserId>(none), p, HashKey{1, 2}, Seed{s}),
              p.alpha_min);
  }
}

TEST(HarmonicDecodeTest, ConstantColumn) {
  for (uint16_t v : {1, 5, 12}) {
    const std::vector<uint16_t> col(64, v);
    EXPECT_NEAR(HarmonicDecode(col, 1.0, 1.0), std::pow(2.0, v), 1e-9);
    EXPECT_NEAR(HarmonicDecode(col, 0.5, 1.0), std::pow(1.5, v), 1e-9);
  }
}

TEST(HarmonicDecodeTest, PhantomFloorOnEmptySet) {
  // Private sketches of an empty cluster decode to about n_p; after the
  // phantom subtraction the estimate must not fall far below zero.
  const SketchParams p = SketchParams::FromEpsPrime(1024, 1.0, 0.01);
  const auto keys = DeriveKeys(Seed{5}, p.M);
  Partition part;
  part.k = 2;
  part.labels = {0, 0, 0};
  const std::vector<uint64_t> fps = {1, 2, 3};
  const SketchSet s = SketchPartition(fps, part, p, keys, Seed{6});
  const double est = HarmonicDecode(s.Column(1), 1.0) - double(p.n_p);
  EXPECT_GE(est, -4.0 * 1.1 * double(p.n_p) / std::sqrt(double(p.M)));
}

TEST(HarmonicDecodeTest, UnbiasedAfterCalibration) {
  // Independent simulation of ideal sketches, decoded by the library.
  constexpr size_t kM = 4096;
  constexpr int kTrials = 60;
  RandomStream rng(Seed{8});
  for (double N : {2000.0, 50000.0}) {
    std::vector<double> ratios;
    for (int t = 0; t < kTrials; ++t) {
      std::vector<uint16_t> col(kM);
      for (auto& v : col) {
        v = static_cast<uint16_t>(OracleMaxGeometric(N, 1.0, rng.NextUniform()));
      }
      ratios.push_back(HarmonicDecode(col, 1.0) / N);
    }
    double mean = 0.0;
    for (double r : ratios) mean += r;
    mean /= kTrials;
    double var = 0.0;
    for (double r : ratios) var += (r - mean) * (r - mean);
    const double se = std::sqrt(var / (kTrials - 1) / kTrials);
    EXPECT_NEAR(mean, 1.0, 0.005 + 3.0 * se) << "N=" << N;
  }
}

TEST(CalibrateXiTest, CachedEqualsRecomputed) {
  EXPECT_EQ(CalibrateXi(1.0, 4096), CalibrateXiUncached(1.0, 4096));
  EXPECT_EQ(CalibrateXi(1.0, 3000), CalibrateXi(1.0, 4096));
  EXPECT_EQ(XiBucket(3000), 4096u);
}

TEST(CalibrateXiTest, StableAcrossSketchCounts) {
  const double small = CalibrateXi(1.0, 64);
  const double large = CalibrateXi(1.0, 4096);
  EXPECT_LT(std::fabs(small - large) / large, 0.05);
}

TEST(SketchPartitionTest, ColumnsMatchDirectMaxOracle) {
  const auto ids = MakeIds(100, "user");
  std::vector<uint64_t> fps;
  for (const auto& id : ids) fps.push_back(IdFingerprint(id));
  Partition part;
  part.k = 2;
  for (size_t i = 0; i < ids.size(); ++i) part.labels.push_back(i % 3 == 0);
  const SketchParams p = SketchParams::NonPrivate(8, 1.0);
  const auto keys = DeriveKeys(Seed{1}, p.M);
  const SketchSet s = SketchPartition(fps, part, p, keys, Seed{2});
  for (size_t i = 0; i < p.M; ++i) {
    const GeometricHash h(keys[i], 1.0);
    uint32_t expect[2] = {0, 0};
    for (size_t u = 0; u < ids.size(); ++u) {
      expect[part.labels[u]] = std::max(expect[part.labels[u]], h(ids[u]));
    }
    EXPECT_EQ(s.at(i, 0), expect[0]);
    EXPECT_EQ(s.at(i, 1), expect[1]);
  }
}

TEST(SketchPartitionTest, DecodesClusterSizes) {
  const auto ids = MakeIds(20000, "p");
  std::vector<uint64_t> fps;
  for (const auto& id : ids) fps.push_back(IdFingerprint(id));
  Partition part;
  part.k = 2;
  for (size_t i = 0; i < ids.size(); ++i) part.labels.push_back(i < 15000 ? 0 : 1);
  const SketchParams p = SketchParams::NonPrivate(4096, 1.0);
  const auto keys = DeriveKeys(Seed{4}, p.M);
  const SketchSet s = SketchPartition(fps, part, p, keys, Seed{2});
  // About 1.1 / sqrt(M) relative standard error; allow four of them.
  EXPECT_NEAR(HarmonicDecode(s.Column(0), 1.0), 15000.0, 15000.0 * 0.07);
  EXPECT_NEAR(HarmonicDecode(s.Column(1), 1.0), 5000.0, 5000.0 * 0.07);
}

TEST(SketchPartitionTest, Deterministic) {
  const auto ids = MakeIds(300, "d");
  Matrix pts(ids.size(), 1);
  for (size_t i = 0; i < ids.size(); ++i) pts(i, 0) = (i % 7) / 7.0;
  Matrix centers(3, 1);
  centers(0, 0) = 0.0;
  centers(1, 0) = 0.5;
  centers(2, 0) = 1.0;
  const SketchParams p = SketchParams::Private(64, 1.0, 0.5, 1e-5);
  const auto keys = DeriveKeys(Seed{3}, p.M);
  const SketchSet a = DpfmpsGen(ids, pts, centers, p, keys, Seed{9}, 1);
  const SketchSet b = DpfmpsGen(ids, pts, centers, p, keys, Seed{9}, 1);
  EXPECT_EQ(a, b);
  const SketchSet c = DpfmpsGen(ids, pts, centers, p, keys, Seed{10}, 1);
  EXPECT_NE(a.values, c.values);
}

TEST(SketchPartitionTest, NeedsTwoCenters) {
  const auto ids = MakeIds(5, "x");
  const Matrix pts(5, 1);
  const Matrix one(1, 1);
  const SketchParams p = SketchParams::NonPrivate(4, 1.0);
  const auto keys = DeriveKeys(Seed{3}, p.M);
  EXPECT_THROW(DpfmpsGen(ids, pts, one, p, keys, Seed{1}), Error);
}

TEST(SerializeTest, PayloadSizeAtDefaultScale) {
  SketchSet s;
  s.params = SketchParams::FromEpsPrime(4096, 1.0, 1e-4);
  s.k_prime = 5;
  s.values.assign(4096 * 5, 3);
  const auto bytes = SerializeSketchSet(s);
  EXPECT_EQ(bytes.size(), 163840u + kSketchHeaderBytes);
  const SketchSet back = DeserializeSketchSet(bytes);
  EXPECT_EQ(back, s);
  EXPECT_TRUE(back.params.CompatibleWith(s.params));
}

TEST(SerializeTest, MatchesGoldenFile) {
  SketchSet s;
  s.params = SketchParams::FromEpsPrime(3, 1.0, 0.001);
  s.party = 1;
  s.k_prime = 2;
  s.values = {1, 2, 3, 4, 5, 65535};
  std::ifstream in(std::string(DPVFC_GOLDEN_DIR) + "/sketch_m3_k2.bin",
                   std::ios::binary);
  ASSERT_TRUE(in);
  const std::vector<uint8_t> golden((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
  EXPECT_EQ(SerializeSketchSet(s), golden);
  const SketchSet back = DeserializeSketchSet(golden);
  EXPECT_EQ(back, s);
  EXPECT_EQ(back.params.n_p, s.params.n_p);
  EXPECT_EQ(back.params.alpha_min, s.params.alpha_min);
}

TEST(SerializeTest, TruncatedInputIsAParseError) {
  SketchSet s;
  s.params = SketchParams::NonPrivate(2, 1.0);
  s.k_prime = 2;
  s.values = {1, 2, 3, 4};
  auto bytes = SerializeSketchSet(s);
  bytes.pop_back();
  try {
    DeserializeSketchSet(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
}

TEST(SampleMaxGeometricTest, FloorRarelyBindsForLargeSets) {
  // With 10^4 members and eps' = 0.01 the alpha_min floor almost never
  // changes the sketch, so means with and without it agree.
  const SketchParams p = SketchParams::FromEpsPrime(1, 1.0, 0.01);
  RandomStream rng(Seed{12});
  double with = 0.0, without = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const uint32_t v = SampleMaxGeometric(10000 + p.n_p, 1.0, rng);
    without += v;
    with += std::max(v, p.alpha_min);
  }
  EXPECT_LT(std::fabs(with - without) / without, 0.001);
}

TEST(SampleMaxGeometricTest, MatchesOracleDistribution) {
  RandomStream rng(Seed{13});
  constexpr int kDraws = 200000;
  std::vector<int> counts(40, 0);
  for (int t = 0; t < kDraws; ++t) ++counts[std::min(39u, SampleMaxGeometric(50, 1.0, rng))];
  for (int v = 4; v < 10; ++v) {
    const double pmf = std::pow(1.0 - std::pow(2.0, -v), 50) -
                       std::pow(1.0 - std::pow(2.0, -(v - 1)), 50);
    EXPECT_NEAR(counts[v] / double(kDraws), pmf, 5 * std::sqrt(pmf / kDraws));
  }
}

}  // namespace
}  // namespace dpvfc
