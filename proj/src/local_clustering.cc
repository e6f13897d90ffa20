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

#include "dpvfc/local_clustering.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dpvfc/status.h"

namespace dpvfc {
namespace {

Matrix RandomCenters(size_t k, size_t m, RandomStream& rng) {
  Matrix c(k, m);
  for (double& v : c.data) v = 2.0 * rng.NextUniform() - 1.0;
  return c;
}

void ValidateData(const Matrix& data, size_t k_prime, double eps1) {
  CheckParameter(k_prime >= 1, "k' must be at least 1");
  CheckParameter(eps1 > 0.0, "eps1 must be positive");
  CheckParameter(data.rows >= 1 && data.cols >= 1, "data must be non-empty");
}

struct TrieNode {
  std::vector<uint32_t> members;
  double noisy_count = 0.0;
  size_t depth = 0;
};

}  // namespace

void ClampCenters(Matrix& centers) {
  for (double& v : centers.data) v = std::clamp(v, -1.0, 1.0);
}

double DplsfTheta(double sigma, size_t m, double n, size_t k_prime) {
  CheckParameter(k_prime >= 1, "k' must be at least 1");
  const double by_noise = 10.0 * sigma * std::sqrt(static_cast<double>(m));
  const double by_size = std::floor(n / (2.0 * static_cast<double>(k_prime)));
  return std::min(by_noise, by_size);
}

LocalModel Dplsf(const Matrix& data, size_t k_prime, double eps1, Seed seed,
                 const DplsfOptions& options, PrivacyLedger* ledger, int party,
                 DplsfDiagnostics* diagnostics) {
  ValidateData(data, k_prime, eps1);
  CheckParameter(options.count_fraction > 0.0 && options.count_fraction < 1.0,
                 "count fraction must lie in (0, 1)");
  CheckParameter(options.depth >= 1, "trie depth must be at least 1");
  const size_t n = data.rows;
  const size_t m = data.cols;
  const size_t L = options.depth;
  const RandomStream root(seed);

  // Hyperplanes with Gaussian normals through uniform points of the cube.
  RandomStream plane_rng = root.Fork("hyperplanes");
  Matrix normals(L, m);
  std::vector<double> offsets(L);
  for (size_t h = 0; h < L; ++h) {
    double offset = 0.0;
    for (size_t j = 0; j < m; ++j) {
      normals(h, j) = plane_rng.NextGaussian();
      offset += normals(h, j) * (2.0 * plane_rng.NextUniform() - 1.0);
    }
    offsets[h] = offset;
  }
  auto bit = [&](uint32_t i, size_t h) {
    double dot = 0.0;
    for (size_t j = 0; j < m; ++j) dot += normals(h, j) * data(i, j);
    return dot >= offsets[h];
  };

  // Root plus one level per hyperplane, composed sequentially.
  const double eps_count = eps1 * options.count_fraction;
  const double eps_sum = eps1 - eps_count;
  const double eps_level = eps_count / static_cast<double>(L + 1);
  const double sum_scale = static_cast<double>(m) / eps_sum;
  const double sigma = std::sqrt(2.0) * sum_scale;

  RandomStream count_rng = root.Fork("counts");
  std::vector<TrieNode> frontier(1);
  frontier[0].members.resize(n);
  for (size_t i = 0; i < n; ++i) frontier[0].members[i] = static_cast<uint32_t>(i);
  frontier[0].noisy_count =
      static_cast<double>(n) + count_rng.NextLaplace(1.0 / eps_level);
  const double theta =
      DplsfTheta(sigma, m, std::max(frontier[0].noisy_count, 0.0), k_prime);

  std::vector<TrieNode> leaves;
  size_t max_depth = 0;
  while (!frontier.empty()) {
    std::vector<TrieNode> next;
    for (TrieNode& node : frontier) {
      max_depth = std::max(max_depth, node.depth);
      if (node.noisy_count <= 3.0 * theta || node.depth >= L) {
        leaves.push_back(std::move(node));
        continue;
      }
      TrieNode child[2];
      for (int b = 0; b < 2; ++b) child[b].depth = node.depth + 1;
      for (uint32_t i : node.members) {
        child[bit(i, node.depth) ? 1 : 0].members.push_back(i);
      }
      for (int b = 0; b < 2; ++b) {
        child[b].noisy_count = static_cast<double>(child[b].members.size()) +
                               count_rng.NextLaplace(1.0 / eps_level);
        next.push_back(std::move(child[b]));
      }
    }
    frontier = std::move(next);
  }

  // Leaves partition the users, so their sums compose in parallel.
  RandomStream sum_rng = root.Fork("sums");
  std::vector<double> leaf_points;
  std::vector<double> leaf_weights;
  for (const TrieNode& leaf : leaves) {
    std::vector<double> sum(m, 0.0);
    for (uint32_t i : leaf.members) {
      for (size_t j = 0; j < m; ++j) sum[j] += data(i, j);
    }
    for (double& s : sum) s += sum_rng.NextLaplace(sum_scale);
    if (leaf.noisy_count <= 0.0) continue;
    for (size_t j = 0; j < m; ++j) {
      leaf_points.push_back(std::clamp(sum[j] / leaf.noisy_count, -1.0, 1.0));
    }
    leaf_weights.push_back(leaf.noisy_count);
  }

  if (ledger != nullptr) {
    for (size_t level = 0; level <= L; ++level) {
      ledger->Record(party, "dplsf-count-level-" + std::to_string(level),
                     eps_level);
    }
    ledger->Record(party, "dplsf-leaf-sums", eps_sum);
  }

  LocalModel model;
  const bool degenerate = leaf_weights.empty();
  if (degenerate) {
    RandomStream fallback = root.Fork("fallback");
    model.centers = RandomCenters(k_prime, m, fallback);
  } else {
    WeightedPoints wp;
    wp.points = Matrix(leaf_weights.size(), m);
    wp.points.data = std::move(leaf_points);
    wp.weights = std::move(leaf_weights);
    model.centers =
        WeightedKMeans(wp, k_prime, root.Fork("kmeans").NextSeed(),
                       options.kmeans)
            .centers;
  }
  ClampCenters(model.centers);
  model.partition = AssignNearest(data, model.centers);
  if (diagnostics != nullptr) {
    diagnostics->sigma = sigma;
    diagnostics->theta = theta;
    diagnostics->leaves = leaves.size();
    diagnostics->max_depth = max_depth;
    diagnostics->degenerate = degenerate;
  }
  return model;
}

LocalModel Dplloyd(const Matrix& data, size_t k_prime, double eps1, Seed seed,
                   const DplloydOptions& options, PrivacyLedger* ledger,
                   int party) {
  ValidateData(data, k_prime, eps1);
  CheckParameter(options.iters >= 1, "DPLloyd needs at least one iteration");
  const size_t m = data.cols;
  const RandomStream root(seed);
  Matrix centers;
  if (options.init.has_value()) {
    centers = *options.init;
    if (centers.rows != k_prime || centers.cols != m) {
      throw Error(ErrorCode::kDimMismatch, "initial centers have wrong shape");
    }
  } else {
    RandomStream init_rng = root.Fork("init");
    centers = RandomCenters(k_prime, m, init_rng);
  }
  const double eps_iter = eps1 / static_cast<double>(options.iters);
  const double count_scale = 1.0 / (eps_iter / 2.0);
  const double sum_scale = static_cast<double>(m) / (eps_iter / 2.0);
  RandomStream noise = root.Fork("noise");
  for (size_t it = 0; it < options.iters; ++it) {
    const Partition p = AssignNearest(data, centers);
    Matrix sums(k_prime, m);
    std::vector<double> counts(k_prime, 0.0);
    for (size_t i = 0; i < data.rows; ++i) {
      counts[p.labels[i]] += 1.0;
      auto s = sums.row(p.labels[i]);
      for (size_t j = 0; j < m; ++j) s[j] += data(i, j);
    }
    for (size_t c = 0; c < k_prime; ++c) {
      const double noisy_count = counts[c] + noise.NextLaplace(count_scale);
      for (size_t j = 0; j < m; ++j) sums(c, j) += noise.NextLaplace(sum_scale);
      if (noisy_count < 1.0) continue;
      for (size_t j = 0; j < m; ++j) {
        centers(c, j) = std::clamp(sums(c, j) / noisy_count, -1.0, 1.0);
      }
    }
    if (ledger != nullptr) {
      ledger->Record(party, "dplloyd-counts-iter-" + std::to_string(it),
                     eps_iter / 2.0);
      ledger->Record(party, "dplloyd-sums-iter-" + std::to_string(it),
                     eps_iter / 2.0);
    }
  }
  LocalModel model;
  model.centers = std::move(centers);
  model.partition = AssignNearest(data, model.centers);
  return model;
}

LocalModel NonPrivateLocal(const Matrix& data, size_t k_prime, Seed seed,
                           const KMeansOptions& options) {
  CheckParameter(k_prime >= 1, "k' must be at least 1");
  WeightedPoints wp{data, std::vector<double>(data.rows, 1.0)};
  LocalModel model;
  model.centers = WeightedKMeans(wp, k_prime, seed, options).centers;
  ClampCenters(model.centers);
  model.partition = AssignNearest(data, model.centers);
  return model;
}

}  // namespace dpvfc
