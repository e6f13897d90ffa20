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

#ifndef DPVFC_DATASET_H_
#define DPVFC_DATASET_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpvfc/geometric_hash.h"
#include "dpvfc/matrix.h"
#include "dpvfc/random.h"

namespace dpvfc {

// Gaussian standard deviation calibrated so the non-private central loss of
// the default synthetic set sits near 0.076.
inline constexpr double kDefaultSpread = 0.1006;

struct FullDataset {
  std::vector<UserId> ids;
  Matrix matrix;
  std::vector<std::string> attributes;
  // Reference class per user; empty when unknown.
  std::vector<uint32_t> labels;
};

// One party's attributes for every user, rows aligned with ids.
struct DatasetView {
  std::vector<UserId> ids;
  Matrix matrix;
  std::vector<std::string> attributes;
  // Column index of each attribute in the full dataset.
  std::vector<size_t> columns;
};

// k centers uniform in [-1, 1]^m; user i belongs to center i mod k and is
// drawn from an isotropic Gaussian around it, clipped to the cube.
FullDataset GenMixedGaussian(size_t n, size_t m, size_t k, double spread,
                             Seed seed);

struct CsvOptions {
  // Attributes to load; empty selects every column other than the id and
  // label columns.
  std::vector<std::string> columns;
  // Upper quantile at which each column is clipped before scaling.
  std::optional<double> clip_quantile;
  std::optional<std::string> id_column;
  std::optional<std::string> label_column;
};

struct ColumnNormalization {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  std::optional<double> clip;
};

struct IngestResult {
  FullDataset data;
  std::vector<ColumnNormalization> normalization;

  std::string ManifestJson() const;
};

// Type-7 sample quantile (linear interpolation between order statistics).
double Quantile(std::vector<double> values, double q);

// Parses CSV text with a header row, clips and min-max scales each selected
// column to [-1, 1]; constant columns map to 0. Throws kParseError with row
// and column context, or kMissingColumn.
IngestResult ParseCsv(const std::string& text, const CsvOptions& options);
IngestResult IngestCsv(const std::string& path, const CsvOptions& options);

enum class SplitMode { kEven, kRatio, kExplicit };

struct SplitSpec {
  size_t parties = 2;
  SplitMode mode = SplitMode::kEven;
  // Attribute count per party, for kRatio.
  std::vector<size_t> ratio;
  // Party of each attribute, for kExplicit.
  std::vector<size_t> assignment;

  // "even", "ratio:2,6" or "explicit:0,1,0,1".
  static SplitSpec Parse(const std::string& text, size_t parties);
  std::string ToString() const;
};

// Resolves the attribute-to-party map. Throws kSpecInvalid unless every
// party receives at least one attribute.
std::vector<size_t> ResolveAssignment(const SplitSpec& spec, size_t m,
                                      Seed seed);

std::vector<DatasetView> VSplit(const FullDataset& full, const SplitSpec& spec,
                                Seed seed);

// Column-wise inverse of VSplit.
Matrix Reassemble(std::span<const DatasetView> views);

}  // namespace dpvfc

#endif  // DPVFC_DATASET_H_
