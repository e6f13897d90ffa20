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

#ifndef DPVFC_RUN_CONFIG_H_
#define DPVFC_RUN_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpvfc/dataset.h"
#include "dpvfc/estimators.h"
#include "dpvfc/sketch.h"

namespace dpvfc {

enum class Estimator {
  kDpfmpsBasic,
  kDpfmpsTwoPhase,
  kIndLap,
  kLdpAgg,
  kLdpAgg2P,
  kNonPrivate,
};

// Accepts the canonical names (DPFMPS-BASIC, DPFMPS-2P, IND-LAP, LDP-AGG,
// LDP-AGG-2P, NON-PRIVATE), case-insensitively, plus the "...EST" spellings.
Estimator ParseEstimator(const std::string& name);
std::string EstimatorName(Estimator e);
bool IsLdp(Estimator e);

enum class LocalClustering { kAuto, kDplsf, kDplloyd, kKMeans };

LocalClustering ParseLocalClustering(const std::string& name);
std::string LocalClusteringName(LocalClustering c);

// Every knob of one end-to-end run. Text form is one "key = value" per
// line; '#' starts a comment. See docs/formats.md for the key list.
struct RunConfig {
  Estimator estimator = Estimator::kDpfmpsTwoPhase;
  LocalClustering local_clustering = LocalClustering::kAuto;
  size_t k = 5;
  // Absent means "auto".
  std::optional<size_t> k_prime = 5;
  size_t k_max = 16;
  double epsilon = 1.0;
  // Absent means 1 / n.
  std::optional<double> delta;
  // Absent means 0.98, or 1 for the LDP estimators.
  std::optional<double> b;
  size_t sketches = kDefaultSketchCount;
  double gamma = kDefaultGamma;
  double rho = kDefaultRho;
  UpdateSchedule schedule;

  size_t parties = 2;
  std::string split = "even";

  std::string dataset = "mixed-gaussian";
  size_t data_n = 20000;
  size_t data_m = 8;
  size_t data_k = 5;
  double data_spread = kDefaultSpread;
  // Absent means the run seed.
  std::optional<uint64_t> data_seed;
  std::string csv_path;
  std::vector<std::string> csv_columns;
  std::optional<double> csv_clip_quantile;
  std::string csv_id_column;
  std::string csv_label_column;

  size_t kmeans_iters = 100;
  size_t kmeans_restarts = 5;
  size_t dplloyd_iters = 5;
  size_t dplsf_depth = 20;
  double dplsf_count_fraction = 0.5;

  uint64_t seed = 0;
  bool seed_set = false;
  std::string output;
  size_t threads = 0;
  // Parties as threads; false runs every actor on the calling thread.
  bool concurrent = true;
  // Adds wall-clock time to reports, which makes them non-reproducible.
  bool timing = false;

  // Applies one key. Throws kConfigInvalid on unknown keys or bad values.
  void Set(const std::string& key, const std::string& value);
  void SetFromText(const std::string& text);
  static RunConfig FromFile(const std::string& path);

  // Cross-field checks. Throws kConfigInvalid.
  void Validate() const;

  double ResolvedB() const;
  double ResolvedDelta(size_t n) const;
  LocalClustering ResolvedLocalClustering() const;
  uint64_t ResolvedDataSeed() const { return data_seed.value_or(seed); }

  // Every key with its current value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> Entries() const;
  std::string ToText() const;
};

// Generates or ingests the configured dataset.
FullDataset LoadDataset(const RunConfig& config);

}  // namespace dpvfc

#endif  // DPVFC_RUN_CONFIG_H_
