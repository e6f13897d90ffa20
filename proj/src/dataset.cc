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

#include "dpvfc/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dpvfc/status.h"

namespace dpvfc {
namespace {

using Record = std::vector<std::string>;

// RFC 4180 style: quoted fields may hold commas, doubled quotes and
// newlines. Blank lines are skipped.
std::vector<Record> SplitCsv(const std::string& text) {
  std::vector<Record> rows;
  Record row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    if (field_started || !row.empty()) {
      end_field();
      rows.push_back(std::move(row));
    }
    row.clear();
  };
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw Error(ErrorCode::kParseError, "unterminated quoted field");
  end_row();
  return rows;
}

std::string Trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double ParseNumber(const std::string& raw, size_t row, const std::string& col) {
  const std::string s = Trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() ||
      !std::isfinite(v)) {
    throw Error(ErrorCode::kParseError, "row " + std::to_string(row) +
                                            ", column '" + col +
                                            "': not a number: '" + raw + "'");
  }
  return v;
}

}  // namespace

FullDataset GenMixedGaussian(size_t n, size_t m, size_t k, double spread,
                             Seed seed) {
  CheckParameter(n >= 1 && m >= 1 && k >= 1, "n, m and k must be positive");
  CheckParameter(spread >= 0.0, "spread must be nonnegative");
  const RandomStream root(seed);
  RandomStream center_rng = root.Fork("centers");
  Matrix centers(k, m);
  for (double& v : centers.data) v = 2.0 * center_rng.NextUniform() - 1.0;
  FullDataset d;
  d.matrix = Matrix(n, m);
  d.ids.resize(n);
  d.labels.resize(n);
  for (size_t j = 0; j < m; ++j) d.attributes.push_back("x" + std::to_string(j));
  RandomStream noise = root.Fork("points");
  char buf[32];
  for (size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "u%08zu", i);
    d.ids[i] = buf;
    const uint32_t label = static_cast<uint32_t>(i % k);
    d.labels[i] = label;
    for (size_t j = 0; j < m; ++j) {
      const double x = centers(label, j) + spread * noise.NextGaussian();
      d.matrix(i, j) = std::clamp(x, -1.0, 1.0);
    }
  }
  return d;
}

double Quantile(std::vector<double> values, double q) {
  CheckParameter(!values.empty(), "quantile of an empty column");
  CheckParameter(q >= 0.0 && q <= 1.0, "quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::string IngestResult::ManifestJson() const {
  nlohmann::json j;
  j["rows"] = data.matrix.rows;
  j["columns"] = nlohmann::json::array();
  for (const auto& c : normalization) {
    nlohmann::json col;
    col["name"] = c.name;
    col["min"] = c.min;
    col["max"] = c.max;
    col["clip"] = c.clip.has_value() ? nlohmann::json(*c.clip) : nullptr;
    j["columns"].push_back(col);
  }
  return j.dump(2);
}

IngestResult ParseCsv(const std::string& text, const CsvOptions& options) {
  if (options.clip_quantile.has_value()) {
    CheckParameter(*options.clip_quantile > 0.0 && *options.clip_quantile <= 1.0,
                   "clip quantile must lie in (0, 1]");
  }
  const std::vector<Record> rows = SplitCsv(text);
  if (rows.empty()) throw Error(ErrorCode::kParseError, "missing header row");
  Record header = rows[0];
  for (auto& h : header) h = Trim(h);
  auto find = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::kMissingColumn, "no column named '" + name + "'");
    }
    return static_cast<size_t>(it - header.begin());
  };
  std::optional<size_t> id_col, label_col;
  if (options.id_column) id_col = find(*options.id_column);
  if (options.label_column) label_col = find(*options.label_column);
  std::vector<size_t> cols;
  if (options.columns.empty()) {
    for (size_t c = 0; c < header.size(); ++c) {
      if (c != id_col && c != label_col) cols.push_back(c);
    }
  } else {
    for (const auto& name : options.columns) cols.push_back(find(name));
  }
  if (cols.empty()) throw Error(ErrorCode::kMissingColumn, "no attributes");

  const size_t n = rows.size() - 1;
  IngestResult out;
  FullDataset& d = out.data;
  d.matrix = Matrix(n, cols.size());
  d.ids.resize(n);
  for (size_t c : cols) d.attributes.push_back(header[c]);
  std::vector<std::string> label_names;
  for (size_t r = 0; r < n; ++r) {
    const Record& rec = rows[r + 1];
    // Row numbers in messages are 1-based file lines, header included.
    const size_t line = r + 2;
    if (rec.size() != header.size()) {
      throw Error(ErrorCode::kParseError,
                  "row " + std::to_string(line) + ": expected " +
                      std::to_string(header.size()) + " fields, found " +
                      std::to_string(rec.size()));
    }
    d.ids[r] = id_col ? Trim(rec[*id_col]) : std::to_string(r);
    for (size_t j = 0; j < cols.size(); ++j) {
      d.matrix(r, j) = ParseNumber(rec[cols[j]], line, header[cols[j]]);
    }
    if (label_col) {
      const std::string name = Trim(rec[*label_col]);
      auto it = std::find(label_names.begin(), label_names.end(), name);
      if (it == label_names.end()) {
        label_names.push_back(name);
        it = label_names.end() - 1;
      }
      d.labels.push_back(static_cast<uint32_t>(it - label_names.begin()));
    }
  }
  {
    std::vector<UserId> sorted = d.ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error(ErrorCode::kParseError, "duplicate user ids");
    }
  }

  for (size_t j = 0; j < cols.size(); ++j) {
    ColumnNormalization norm;
    norm.name = header[cols[j]];
    std::vector<double> column(n);
    for (size_t r = 0; r < n; ++r) column[r] = d.matrix(r, j);
    if (options.clip_quantile && n > 0) {
      const double cap = Quantile(column, *options.clip_quantile);
      norm.clip = cap;
      for (double& v : column) v = std::min(v, cap);
    }
    if (n > 0) {
      norm.min = *std::min_element(column.begin(), column.end());
      norm.max = *std::max_element(column.begin(), column.end());
    }
    const double range = norm.max - norm.min;
    for (size_t r = 0; r < n; ++r) {
      d.matrix(r, j) =
          range > 0.0 ? 2.0 * (column[r] - norm.min) / range - 1.0 : 0.0;
    }
    out.normalization.push_back(norm);
  }
  return out;
}

IngestResult IngestCsv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseCsv(buf.str(), options);
}

namespace {

std::vector<size_t> ParseList(const std::string& text) {
  std::vector<size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    size_t v = 0;
    const auto [ptr, ec] =
        std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw Error(ErrorCode::kSpecInvalid, "bad split list entry '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

SplitSpec SplitSpec::Parse(const std::string& text, size_t parties) {
  SplitSpec s;
  s.parties = parties;
  // Ratios may also be written with colons, as in "2:6".
  if (text == "even") {
    s.mode = SplitMode::kEven;
  } else if (text.rfind("ratio:", 0) == 0) {
    s.mode = SplitMode::kRatio;
    std::string list = text.substr(6);
    std::replace(list.begin(), list.end(), ':', ',');
    s.ratio = ParseList(list);
  } else if (text.rfind("explicit:", 0) == 0) {
    s.mode = SplitMode::kExplicit;
    s.assignment = ParseList(text.substr(9));
  } else {
    throw Error(ErrorCode::kSpecInvalid, "unknown split '" + text + "'");
  }
  return s;
}

std::string SplitSpec::ToString() const {
  auto join = [](const std::vector<size_t>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i > 0) s += ',';
      s += std::to_string(v[i]);
    }
    return s;
  };
  switch (mode) {
    case SplitMode::kEven:
      return "even";
    case SplitMode::kRatio:
      return "ratio:" + join(ratio);
    case SplitMode::kExplicit:
      return "explicit:" + join(assignment);
  }
  return "even";
}

std::vector<size_t> ResolveAssignment(const SplitSpec& spec, size_t m,
                                      Seed seed) {
  if (spec.parties < 1) throw Error(ErrorCode::kSpecInvalid, "no parties");
  std::vector<size_t> assignment(m);
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  RandomStream rng = RandomStream(seed).Fork("vsplit");
  switch (spec.mode) {
    case SplitMode::kEven:
      Shuffle(std::span<size_t>(order), rng);
      for (size_t i = 0; i < m; ++i) assignment[order[i]] = i % spec.parties;
      break;
    case SplitMode::kRatio: {
      if (spec.ratio.size() != spec.parties) {
        throw Error(ErrorCode::kSpecInvalid, "one ratio entry per party needed");
      }
      if (std::accumulate(spec.ratio.begin(), spec.ratio.end(), size_t{0}) != m) {
        throw Error(ErrorCode::kSpecInvalid,
                    "ratio entries must sum to the attribute count");
      }
      Shuffle(std::span<size_t>(order), rng);
      size_t pos = 0;
      for (size_t l = 0; l < spec.parties; ++l) {
        for (size_t c = 0; c < spec.ratio[l]; ++c) assignment[order[pos++]] = l;
      }
      break;
    }
    case SplitMode::kExplicit:
      if (spec.assignment.size() != m) {
        throw Error(ErrorCode::kSpecInvalid,
                    "explicit split must list every attribute");
      }
      for (size_t a : spec.assignment) {
        if (a >= spec.parties) {
          throw Error(ErrorCode::kSpecInvalid, "party index out of range");
        }
      }
      assignment = spec.assignment;
      break;
  }
  std::vector<size_t> per_party(spec.parties, 0);
  for (size_t a : assignment) ++per_party[a];
  for (size_t c : per_party) {
    if (c == 0) {
      throw Error(ErrorCode::kSpecInvalid, "a party received no attributes");
    }
  }
  return assignment;
}

std::vector<DatasetView> VSplit(const FullDataset& full, const SplitSpec& spec,
                                Seed seed) {
  const std::vector<size_t> assignment =
      ResolveAssignment(spec, full.matrix.cols, seed);
  std::vector<DatasetView> views(spec.parties);
  for (size_t j = 0; j < assignment.size(); ++j) {
    views[assignment[j]].columns.push_back(j);
  }
  for (DatasetView& v : views) {
    v.ids = full.ids;
    v.matrix = Matrix(full.matrix.rows, v.columns.size());
    for (size_t c = 0; c < v.columns.size(); ++c) {
      const size_t src = v.columns[c];
      if (src < full.attributes.size()) v.attributes.push_back(full.attributes[src]);
      for (size_t i = 0; i < full.matrix.rows; ++i) {
        v.matrix(i, c) = full.matrix(i, src);
      }
    }
  }
  return views;
}

Matrix Reassemble(std::span<const DatasetView> views) {
  size_t m = 0;
  const size_t n = views.empty() ? 0 : views[0].matrix.rows;
  for (const auto& v : views) {
    if (v.matrix.rows != n) {
      throw Error(ErrorCode::kLengthMismatch, "views differ in row count");
    }
    m += v.columns.size();
  }
  Matrix out(n, m);
  for (const auto& v : views) {
    for (size_t c = 0; c < v.columns.size(); ++c) {
      if (v.columns[c] >= m) {
        throw Error(ErrorCode::kSpecInvalid, "column index out of range");
      }
      for (size_t i = 0; i < n; ++i) out(i, v.columns[c]) = v.matrix(i, c);
    }
  }
  return out;
}

}  // namespace dpvfc
