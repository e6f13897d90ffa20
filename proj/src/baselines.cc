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

#include "dpvfc/baselines.h"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "dpvfc/parallel.h"
#include "dpvfc/status.h"

namespace dpvfc {
namespace {

// Applies the inverse of (p - q) I + q 11^T along one axis of the tensor.
void InvertAlongAxis(std::vector<double>& t, std::span<const size_t> dims,
                     size_t axis, double p, double q) {
  const size_t k = dims[axis];
  size_t inner = 1;
  for (size_t l = axis + 1; l < dims.size(); ++l) inner *= dims[l];
  const size_t outer = t.size() / (k * inner);
  const double c = q / (p - q + static_cast<double>(k) * q);
  for (size_t o = 0; o < outer; ++o) {
    for (size_t in = 0; in < inner; ++in) {
      const size_t base = o * k * inner + in;
      double sum = 0.0;
      for (size_t a = 0; a < k; ++a) sum += t[base + a * inner];
      for (size_t a = 0; a < k; ++a) {
        double& y = t[base + a * inner];
        y = (y - c * sum) / (p - q);
      }
    }
  }
}

}  // namespace

NoisyHistogram MakeNoisyHistogram(const Partition& partition, double eps2,
                                  Seed seed) {
  CheckParameter(eps2 > 0.0, "eps2 must be positive");
  NoisyHistogram h;
  h.eps2 = eps2;
  const std::vector<size_t> sizes = partition.Sizes();
  h.counts.assign(sizes.begin(), sizes.end());
  if (std::isinf(eps2)) return h;
  RandomStream rng(seed);
  for (double& c : h.counts) c += rng.NextLaplace(1.0 / eps2);
  return h;
}

WeightGrid IndLap(double nhat, std::span<const NoisyHistogram> histograms) {
  CheckParameter(nhat > 0.0, "nhat must be positive");
  CheckParameter(histograms.size() >= 2, "IND-LAP needs at least two parties");
  std::vector<std::vector<double>> marginals;
  std::vector<size_t> dims;
  for (const auto& h : histograms) {
    marginals.push_back(h.counts);
    dims.push_back(h.counts.size());
  }
  const std::vector<double> raw = IndependenceInit(nhat, marginals);
  return EnforceConsistency(raw, dims, nhat);
}

LdpMechanism LdpMechanism::Select(size_t k_prime, double eps2) {
  CheckParameter(k_prime >= 2, "LDP encoding needs k' >= 2");
  CheckParameter(eps2 >= 0.0, "eps2 must be nonnegative");
  LdpMechanism m;
  m.k_prime = k_prime;
  m.eps2 = eps2;
  const double e = std::exp(eps2);
  if (static_cast<double>(k_prime) <= 3.0 * e + 2.0) {
    m.kind = LdpKind::kGrr;
    m.domain = static_cast<uint32_t>(k_prime);
    // Written in terms of e^-eps so that huge budgets give p = 1, q = 0.
    const double inv = std::exp(-eps2);
    const double denom = 1.0 + (static_cast<double>(k_prime) - 1.0) * inv;
    m.p = 1.0 / denom;
    m.q = inv / denom;
  } else {
    m.kind = LdpKind::kOlh;
    m.domain = static_cast<uint32_t>(std::floor(e + 1.0));
    m.p = e / (e + m.domain - 1.0);
    m.q = 1.0 / m.domain;
  }
  return m;
}

uint32_t OlhHash(uint64_t seed, uint32_t value, uint32_t domain) {
  const uint64_t h = Mix64(seed ^ Mix64(value + 0x2545f4914f6cdd1dULL));
  return static_cast<uint32_t>(
      (static_cast<unsigned __int128>(h) * domain) >> 64);
}

namespace {

// Generalized randomized response over [0, domain).
uint32_t Randomize(uint32_t truth, uint32_t domain, double eps2,
                   RandomStream& rng) {
  const double keep = 1.0 / (1.0 + (domain - 1.0) * std::exp(-eps2));
  if (rng.NextUniform() < keep) return truth;
  const uint32_t other = static_cast<uint32_t>(rng.NextBelow(domain - 1));
  return other < truth ? other : other + 1;
}

}  // namespace

LdpReport LdpEncode(uint32_t partition_index, size_t k_prime, double eps2,
                    Seed seed) {
  const LdpMechanism mech = LdpMechanism::Select(k_prime, eps2);
  CheckParameter(partition_index < k_prime, "partition index out of range");
  RandomStream rng(seed);
  LdpReport r;
  r.kind = mech.kind;
  if (mech.kind == LdpKind::kGrr) {
    r.value = Randomize(partition_index, mech.domain, eps2, rng);
  } else {
    r.seed = rng.NextU64();
    r.value = Randomize(OlhHash(r.seed, partition_index, mech.domain),
                       mech.domain, eps2, rng);
  }
  return r;
}

std::vector<LdpReport> LdpEncodeAll(std::span<const uint32_t> labels,
                                    size_t k_prime, double eps2, Seed seed) {
  std::vector<LdpReport> out(labels.size());
  const RandomStream root(seed);
  ParallelFor(labels.size(), [&](size_t begin, size_t end) {
    for (size_t u = begin; u < end; ++u) {
      out[u] = LdpEncode(labels[u], k_prime, eps2, root.Fork(u).NextSeed());
    }
  }, 4096);
  return out;
}

std::vector<uint32_t> LdpSupport(const LdpReport& report,
                                 const LdpMechanism& mech) {
  if (report.kind == LdpKind::kGrr) return {report.value};
  std::vector<uint32_t> support;
  for (uint32_t a = 0; a < mech.k_prime; ++a) {
    if (OlhHash(report.seed, a, mech.domain) == report.value) {
      support.push_back(a);
    }
  }
  return support;
}

std::vector<double> LdpDecodeRaw(
    std::span<const std::vector<LdpReport>> reports, double eps2,
    size_t k_prime) {
  const LdpMechanism mech = LdpMechanism::Select(k_prime, eps2);
  if (!(mech.p - mech.q > 0.0)) {
    throw Error(ErrorCode::kSingularTransition,
                "report probabilities coincide; transition is singular");
  }
  CheckParameter(!reports.empty(), "no reports to decode");
  const size_t S = reports.size();
  const size_t n = reports[0].size();
  for (const auto& r : reports) {
    if (r.size() != n) {
      throw Error(ErrorCode::kLengthMismatch,
                  "every party must report every user");
    }
  }
  const std::vector<size_t> dims(S, k_prime);
  std::vector<double> counts(GridSize(dims), 0.0);
  std::vector<std::vector<uint32_t>> supports(S);
  std::vector<size_t> cursor(S);
  for (size_t u = 0; u < n; ++u) {
    bool empty = false;
    for (size_t l = 0; l < S; ++l) {
      supports[l] = LdpSupport(reports[l][u], mech);
      empty = empty || supports[l].empty();
    }
    if (empty) continue;
    // Odometer over the Cartesian product of the support sets.
    std::fill(cursor.begin(), cursor.end(), 0);
    while (true) {
      size_t flat = 0;
      for (size_t l = 0; l < S; ++l) flat = flat * k_prime + supports[l][cursor[l]];
      counts[flat] += 1.0;
      size_t l = S;
      while (l-- > 0) {
        if (++cursor[l] < supports[l].size()) break;
        cursor[l] = 0;
      }
      if (l == std::numeric_limits<size_t>::max()) break;
    }
  }
  for (size_t axis = 0; axis < S; ++axis) {
    InvertAlongAxis(counts, dims, axis, mech.p, mech.q);
  }
  return counts;
}

WeightGrid LdpDecode(double nhat,
                     std::span<const std::vector<LdpReport>> reports,
                     double eps2, size_t k_prime) {
  const std::vector<double> raw = LdpDecodeRaw(reports, eps2, k_prime);
  return EnforceConsistency(raw, std::vector<size_t>(reports.size(), k_prime),
                            nhat);
}

WeightGrid LdpAgg2PEst(double nhat,
                       std::span<const std::vector<LdpReport>> reports,
                       double eps2, size_t k_prime,
                       const UpdateSchedule& schedule,
                       RefinementStats* stats) {
  CheckParameter(nhat > 0.0, "nhat must be positive");
  CheckParameter(reports.size() >= 2, "LDP aggregation needs S >= 2");
  const size_t S = reports.size();
  std::vector<std::vector<double>> marginals;
  for (size_t l = 0; l < S; ++l) {
    const std::vector<double> raw = LdpDecodeRaw(reports.subspan(l, 1), eps2,
                                                 k_prime);
    std::vector<double> clipped(raw.size());
    for (size_t a = 0; a < raw.size(); ++a) clipped[a] = std::max(0.0, raw[a]);
    marginals.push_back(std::move(clipped));
  }
  const std::vector<size_t> dims(S, k_prime);
  std::vector<double> init = IndependenceInit(nhat, marginals);
  std::vector<PairTarget> targets;
  for (auto [l1, l2] : PartyPairs(S)) {
    const std::vector<LdpReport> pair[2] = {reports[l1], reports[l2]};
    const WeightGrid g = LdpDecode(nhat, pair, eps2, k_prime);
    PairTarget t{l1, l2, Matrix(k_prime, k_prime)};
    t.target.data = g.weights;
    targets.push_back(std::move(t));
  }
  std::vector<double> refined =
      RefineGrid(std::move(init), dims, targets, nhat, schedule, stats);
  return EnforceConsistency(refined, dims, nhat);
}

std::string LdpReportsToJsonl(int party, std::span<const LdpReport> reports) {
  std::string out;
  for (size_t u = 0; u < reports.size(); ++u) {
    nlohmann::json j;
    j["party"] = party;
    j["user"] = u;
    j["kind"] = reports[u].kind == LdpKind::kGrr ? "grr" : "olh";
    if (reports[u].kind == LdpKind::kOlh) j["seed"] = reports[u].seed;
    j["value"] = reports[u].value;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<LdpReport> LdpReportsFromJsonl(const std::string& text,
                                           int* party) {
  std::vector<LdpReport> out;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      if (j.at("user").get<size_t>() != out.size()) {
        throw Error(ErrorCode::kParseError, "user ordinals out of order");
      }
      if (party != nullptr) *party = j.at("party").get<int>();
      LdpReport r;
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "grr") {
        r.kind = LdpKind::kGrr;
      } else if (kind == "olh") {
        r.kind = LdpKind::kOlh;
        r.seed = j.at("seed").get<uint64_t>();
      } else {
        throw Error(ErrorCode::kParseError, "unknown report kind " + kind);
      }
      r.value = j.at("value").get<uint32_t>();
      out.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace dpvfc
