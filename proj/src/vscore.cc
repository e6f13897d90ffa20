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

#include "dpvfc/vscore.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "dpvfc/status.h"

namespace dpvfc {
namespace {

double Entropy(const std::map<uint32_t, double>& counts, double n) {
  double h = 0.0;
  for (const auto& [label, c] : counts) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

}  // namespace

VScoreResult VScoreDetail(std::span<const uint32_t> labels_true,
                          std::span<const uint32_t> labels_pred) {
  if (labels_true.size() != labels_pred.size()) {
    throw Error(ErrorCode::kLengthMismatch, "labelings differ in length");
  }
  CheckParameter(!labels_true.empty(), "labelings must be non-empty");
  const double n = static_cast<double>(labels_true.size());
  std::map<uint32_t, double> classes, clusters;
  std::map<std::pair<uint32_t, uint32_t>, double> joint;
  for (size_t i = 0; i < labels_true.size(); ++i) {
    classes[labels_true[i]] += 1.0;
    clusters[labels_pred[i]] += 1.0;
    joint[{labels_true[i], labels_pred[i]}] += 1.0;
  }
  const double h_class = Entropy(classes, n);
  const double h_cluster = Entropy(clusters, n);
  // H(class | cluster) and H(cluster | class) from the contingency table.
  double h_class_given_cluster = 0.0;
  double h_cluster_given_class = 0.0;
  for (const auto& [key, c] : joint) {
    const double p = c / n;
    h_class_given_cluster -= p * std::log(c / clusters[key.second]);
    h_cluster_given_class -= p * std::log(c / classes[key.first]);
  }
  VScoreResult r;
  r.homogeneity = h_class == 0.0 ? 1.0 : 1.0 - h_class_given_cluster / h_class;
  r.completeness =
      h_cluster == 0.0 ? 1.0 : 1.0 - h_cluster_given_class / h_cluster;
  r.homogeneity = std::clamp(r.homogeneity, 0.0, 1.0);
  r.completeness = std::clamp(r.completeness, 0.0, 1.0);
  const double denom = r.homogeneity + r.completeness;
  r.v = denom == 0.0 ? 0.0 : 2.0 * r.homogeneity * r.completeness / denom;
  return r;
}

double VScore(std::span<const uint32_t> labels_true,
              std::span<const uint32_t> labels_pred) {
  return VScoreDetail(labels_true, labels_pred).v;
}

}  // namespace dpvfc
