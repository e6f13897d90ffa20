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

#include "dpvfc/estimators.h"

#include <algorithm>
#include <cmath>

#include "dpvfc/parallel.h"
#include "dpvfc/status.h"

namespace dpvfc {
namespace {

// For each row, the maximum over every cluster except `a`, laid out as
// [a][row] for contiguous access while decoding one cell.
std::vector<uint16_t> ComplementMax(const SketchSet& s) {
  const size_t M = s.params.M;
  const size_t k = s.k_prime;
  std::vector<uint16_t> comp(M * k);
  for (size_t i = 0; i < M; ++i) {
    uint16_t top1 = 0, top2 = 0;
    size_t arg = 0;
    for (size_t a = 0; a < k; ++a) {
      const uint16_t v = s.at(i, a);
      if (v > top1) {
        top2 = top1;
        top1 = v;
        arg = a;
      } else if (v > top2) {
        top2 = v;
      }
    }
    for (size_t a = 0; a < k; ++a) comp[a * M + i] = a == arg ? top2 : top1;
  }
  return comp;
}

}  // namespace

std::vector<std::pair<size_t, size_t>> PartyPairs(size_t parties) {
  std::vector<std::pair<size_t, size_t>> pairs;
  for (size_t i = 0; i < parties; ++i) {
    for (size_t j = i + 1; j < parties; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

std::vector<double> IndependenceInit(
    double nhat, std::span<const std::vector<double>> marginals) {
  CheckParameter(nhat > 0.0, "nhat must be positive");
  std::vector<size_t> dims;
  for (const auto& m : marginals) dims.push_back(m.size());
  WeightGrid g = WeightGrid::Zeros(dims, nhat);
  for (size_t flat = 0; flat < g.size(); ++flat) {
    const std::vector<size_t> t = g.Tuple(flat);
    double w = nhat;
    for (size_t l = 0; l < t.size(); ++l) w *= marginals[l][t[l]] / nhat;
    g.weights[flat] = w;
  }
  return g.weights;
}

std::vector<double> RefineGrid(std::vector<double> init,
                               std::span<const size_t> dims,
                               std::span<const PairTarget> targets,
                               double nhat, const UpdateSchedule& schedule,
                               RefinementStats* stats) {
  const size_t cells = GridSize(dims);
  if (init.size() != cells) {
    throw Error(ErrorCode::kDimMismatch, "initial grid does not match dims");
  }
  WeightGrid shape = WeightGrid::Zeros({dims.begin(), dims.end()}, nhat);
  const size_t P = targets.size();
  // groups[p][cell] = row-major index of the cell's (a_l1, a_l2) pair.
  std::vector<std::vector<uint32_t>> groups(P, std::vector<uint32_t>(cells));
  std::vector<double> spread(P);
  for (size_t p = 0; p < P; ++p) {
    const PairTarget& t = targets[p];
    if (t.target.rows != dims[t.l1] || t.target.cols != dims[t.l2]) {
      throw Error(ErrorCode::kDimMismatch, "pair target has the wrong shape");
    }
    spread[p] = static_cast<double>(cells) / (dims[t.l1] * dims[t.l2]);
    for (size_t flat = 0; flat < cells; ++flat) {
      const std::vector<size_t> tuple = shape.Tuple(flat);
      groups[p][flat] =
          static_cast<uint32_t>(tuple[t.l1] * dims[t.l2] + tuple[t.l2]);
    }
  }

  std::vector<double>& w = init;
  std::vector<double> delta;
  auto residual = [&](size_t p) {
    const PairTarget& t = targets[p];
    delta.assign(t.target.data.size(), 0.0);
    for (size_t flat = 0; flat < cells; ++flat) delta[groups[p][flat]] += w[flat];
    double l1 = 0.0;
    for (size_t g = 0; g < delta.size(); ++g) {
      delta[g] -= t.target.data[g];
      l1 += std::fabs(delta[g]);
    }
    return l1;
  };
  auto max_residual = [&] {
    double r = 0.0;
    for (size_t p = 0; p < P; ++p) r = std::max(r, residual(p));
    return r;
  };

  const size_t T = schedule.ResolvedSweeps(dims.size());
  RandomStream rng(schedule.seed);
  RefinementStats local;
  for (size_t sweep = 0; sweep < T && P > 0; ++sweep) {
    if (max_residual() < schedule.tolerance * nhat) {
      local.converged = true;
      break;
    }
    const double eta = sweep < T / 2 ? schedule.eta_first : schedule.eta_second;
    for (size_t step = 0; step < P; ++step) {
      const size_t p = schedule.random_pairs ? rng.NextBelow(P) : step;
      residual(p);
      const double scale = eta / spread[p];
      for (size_t flat = 0; flat < cells; ++flat) {
        w[flat] -= scale * delta[groups[p][flat]];
      }
    }
    local.sweeps_run = sweep + 1;
  }
  local.max_residual = P > 0 ? max_residual() : 0.0;
  if (local.max_residual < schedule.tolerance * nhat) local.converged = true;
  if (stats != nullptr) *stats = local;
  return std::move(w);
}

std::vector<double> BasicEstRaw(double nhat,
                                std::span<const SketchSet* const> sketches) {
  CheckParameter(sketches.size() >= 2, "intersection needs two sketch sets");
  const SketchParams& params = sketches[0]->params;
  const size_t k = sketches[0]->k_prime;
  for (const SketchSet* s : sketches) {
    if (!s->params.CompatibleWith(params) || s->k_prime != k ||
        s->values.size() != params.M * k) {
      throw Error(ErrorCode::kIncompatibleSketches,
                  "sketch sets differ in M, gamma, budget or k'");
    }
  }
  CheckParameter(k >= 2, "partition sketches need k' >= 2");
  const size_t s = sketches.size();
  const size_t M = params.M;
  std::vector<std::vector<uint16_t>> comp;
  comp.reserve(s);
  for (const SketchSet* set : sketches) comp.push_back(ComplementMax(*set));

  const HarmonicDecoder decoder(params.gamma, CalibrateXi(params.gamma, M));
  const double phantoms =
      static_cast<double>(s * (k - 1)) * static_cast<double>(params.n_p);
  const std::vector<size_t> dims(s, k);
  const size_t cells = GridSize(dims);
  std::vector<double> raw(cells);
  ParallelFor(cells, [&](size_t begin, size_t end) {
    std::vector<const uint16_t*> cols(s);
    for (size_t flat = begin; flat < end; ++flat) {
      size_t rest = flat;
      for (size_t l = s; l-- > 0;) {
        cols[l] = comp[l].data() + (rest % k) * M;
        rest /= k;
      }
      double sum = 0.0;
      for (size_t i = 0; i < M; ++i) {
        uint16_t u = cols[0][i];
        for (size_t l = 1; l < s; ++l) u = std::max(u, cols[l][i]);
        sum += decoder.Term(u);
      }
      raw[flat] = nhat - (decoder.Estimate(sum, M) - phantoms);
    }
  });
  return raw;
}

WeightGrid BasicEst(double nhat, std::span<const SketchSet> sketches) {
  CheckParameter(nhat > 0.0, "nhat must be positive");
  std::vector<const SketchSet*> ptrs;
  for (const SketchSet& s : sketches) ptrs.push_back(&s);
  std::vector<double> raw = BasicEstRaw(nhat, ptrs);
  return EnforceConsistency(raw, std::vector<size_t>(ptrs.size(),
                                                     sketches[0].k_prime),
                            nhat);
}

std::vector<double> SinglePartyCounts(const SketchSet& sketches) {
  const SketchParams& p = sketches.params;
  const HarmonicDecoder decoder(p.gamma, CalibrateXi(p.gamma, p.M));
  std::vector<double> counts(sketches.k_prime);
  for (size_t a = 0; a < sketches.k_prime; ++a) {
    const double c = decoder.Decode(sketches.Column(a)) -
                     static_cast<double>(p.n_p);
    counts[a] = std::max(0.0, c);
  }
  return counts;
}

WeightGrid TwoPhaseEst(double nhat, std::span<const SketchSet> sketches,
                       const UpdateSchedule& schedule,
                       RefinementStats* stats) {
  CheckParameter(nhat > 0.0, "nhat must be positive");
  CheckParameter(sketches.size() >= 2, "two-phase estimation needs S >= 2");
  std::vector<std::vector<double>> marginals;
  std::vector<size_t> dims;
  for (const SketchSet& s : sketches) {
    marginals.push_back(SinglePartyCounts(s));
    dims.push_back(s.k_prime);
  }
  std::vector<double> init = IndependenceInit(nhat, marginals);
  std::vector<PairTarget> targets;
  for (auto [l1, l2] : PartyPairs(sketches.size())) {
    const SketchSet pair[2] = {sketches[l1], sketches[l2]};
    const WeightGrid g = BasicEst(nhat, pair);
    PairTarget t{l1, l2, Matrix(dims[l1], dims[l2])};
    t.target.data = g.weights;
    targets.push_back(std::move(t));
  }
  std::vector<double> refined =
      RefineGrid(std::move(init), dims, targets, nhat, schedule, stats);
  return EnforceConsistency(refined, dims, nhat);
}

double SigmaModel::Sigma(double n, double w_star, size_t s,
                         size_t k_prime) const {
  return rho * (n - w_star) / std::sqrt(static_cast<double>(M)) +
         4.0 * rho * static_cast<double>(s * (k_prime - 1)) *
             std::sqrt(std::log(1.0 / delta)) / eps2;
}

size_t AutoKPrime(double nhat, size_t k, size_t parties,
                  const SigmaModel& model, size_t k_max) {
  CheckParameter(k_max >= 2, "k_max must be at least 2");
  CheckParameter(nhat > 0.0, "nhat must be positive");
  CheckParameter(k >= 1, "k must be at least 1");
  CheckParameter(parties >= 1, "party count must be positive");
  size_t k0 = k_max;
  for (size_t c = 2; c <= k_max; ++c) {
    const double cell = nhat / static_cast<double>(c * c);
    if (2.0 * model.Sigma(nhat, cell, 2, c) >= cell) {
      k0 = c;
      break;
    }
  }
  size_t root = 1;
  auto power = [&](size_t r) {
    double v = 1.0;
    for (size_t i = 0; i < parties; ++i) v *= static_cast<double>(r);
    return v;
  };
  while (power(root) < static_cast<double>(k)) ++root;
  return std::clamp(std::max(k0, root), size_t{2}, k_max);
}

}  // namespace dpvfc
