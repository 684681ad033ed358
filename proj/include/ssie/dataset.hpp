//
// Copyright 2026 The SSIE Authors
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
//

// Loading delimited tabular data through a declarative schema into a binary
// (one-hot) feature matrix with a binary target.
//
// A schema is a JSON document:
//
//   {
//     "name": "adult",
//     "header": false,                  // first line holds column names
//     "column_names": ["age", ...],     // required when header is false
//     "skip_prefix": "|",               // lines starting with this are ignored
//     "trim_whitespace": true,
//     "missing_markers": ["?"],         // a kept cell equal to one -> row dropped
//     "filters": [                      // rows failing any filter are removed
//       {"column": "days", "min": -30, "max": 30},
//       {"column": "score", "exclude": ["N/A"]}
//     ],
//     "group": "sex=Female",            // default group feature (optional)
//     "fields": [
//       {"column": "age", "role": "predictor",
//        "binning": {"kind": "numeric", "edges": [25, 45, 65]}},
//       {"column": "workclass", "role": "predictor",
//        "binning": {"kind": "categorical"}},      // optional "values": [...]
//       {"column": "race", "role": "group",
//        "binning": {"kind": "map", "map": {"White": "white"},
//                    "default": "nonwhite"},
//        "indicator": "white"},                    // only race=white
//       {"column": "income", "role": "target", "positive": [">50K"]},
//       {"column": "fnlwgt", "role": "drop"}
//     ]
//   }
//
// Columns not named in "fields" are dropped. Feature columns are named
// "column=bucket" and ordered by field order, then
// bucket label.

#pragma once

#include <boost/tokenizer.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ssie/digest.hpp"
#include "ssie/error.hpp"

namespace ssie {

enum class ColumnRole { kTarget, kGroup, kPredictor, kDrop };

struct Binning {
  enum class Kind { kCategorical, kNumeric, kMap };
  Kind kind = Kind::kCategorical;
  // kCategorical: closed vocabulary when non-empty.
  std::vector<std::string> values;
  // kNumeric: ascending bucket edges; value v falls in bucket i where
  // edges[i-1] <= v < edges[i].
  std::vector<double> edges;
  std::vector<std::string> labels;  // optional, edges.size() + 1 names
  // kMap: raw value -> bucket; unmapped values go to `fallback` if set.
  std::map<std::string, std::string> mapping;
  std::optional<std::string> fallback;
};

struct FieldSpec {
  std::string column;
  ColumnRole role = ColumnRole::kPredictor;
  Binning binning;
  std::optional<std::string> indicator;
  std::vector<std::string> positive;  // target only
};

struct RowFilter {
  std::string column;
  std::optional<double> min;
  std::optional<double> max;
  std::vector<std::string> exclude;
};

struct SchemaConfig {
  std::string name;
  bool header = true;
  std::vector<std::string> column_names;
  std::string skip_prefix;
  bool trim_whitespace = true;
  std::vector<std::string> missing_markers;
  std::vector<RowFilter> filters;
  std::optional<std::string> group;
  std::vector<FieldSpec> fields;
  std::string digest;

  const FieldSpec& Target() const {
    for (const auto& f : fields) {
      if (f.role == ColumnRole::kTarget) return f;
    }
    throw DataError("schema has no target column");
  }

  static SchemaConfig FromJson(const nlohmann::json& j) {
    SchemaConfig s;
    try {
      s.name = j.value("name", "");
      s.header = j.value("header", true);
      s.column_names = j.value("column_names", std::vector<std::string>{});
      s.skip_prefix = j.value("skip_prefix", "");
      s.trim_whitespace = j.value("trim_whitespace", true);
      s.missing_markers =
          j.value("missing_markers", std::vector<std::string>{});
      if (j.contains("group")) s.group = j.at("group").get<std::string>();
      for (const auto& f : j.value("filters", nlohmann::json::array())) {
        RowFilter rf;
        rf.column = f.at("column").get<std::string>();
        if (f.contains("min")) rf.min = f.at("min").get<double>();
        if (f.contains("max")) rf.max = f.at("max").get<double>();
        rf.exclude = f.value("exclude", std::vector<std::string>{});
        s.filters.push_back(std::move(rf));
      }
      for (const auto& f : j.at("fields")) {
        FieldSpec spec;
        spec.column = f.at("column").get<std::string>();
        const std::string role = f.value("role", "predictor");
        if (role == "target") {
          spec.role = ColumnRole::kTarget;
        } else if (role == "group") {
          spec.role = ColumnRole::kGroup;
        } else if (role == "predictor") {
          spec.role = ColumnRole::kPredictor;
        } else if (role == "drop") {
          spec.role = ColumnRole::kDrop;
        } else {
          throw DataError("field '" + spec.column + "': unknown role '" +
                          role + "'");
        }
        if (f.contains("binning")) {
          const auto& b = f.at("binning");
          const std::string kind = b.value("kind", "categorical");
          if (kind == "categorical") {
            spec.binning.kind = Binning::Kind::kCategorical;
            spec.binning.values =
                b.value("values", std::vector<std::string>{});
          } else if (kind == "numeric") {
            spec.binning.kind = Binning::Kind::kNumeric;
            spec.binning.edges = b.at("edges").get<std::vector<double>>();
            spec.binning.labels =
                b.value("labels", std::vector<std::string>{});
          } else if (kind == "map") {
            spec.binning.kind = Binning::Kind::kMap;
            spec.binning.mapping =
                b.at("map").get<std::map<std::string, std::string>>();
            if (b.contains("default")) {
              spec.binning.fallback = b.at("default").get<std::string>();
            }
          } else {
            throw DataError("field '" + spec.column +
                            "': unknown binning kind '" + kind + "'");
          }
        }
        if (f.contains("indicator")) {
          spec.indicator = f.at("indicator").get<std::string>();
        }
        spec.positive = f.value("positive", std::vector<std::string>{});
        s.fields.push_back(std::move(spec));
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed schema: ") + e.what());
    }
    s.Validate();
    s.digest = Sha256Hex(j.dump());
    return s;
  }

  static SchemaConfig FromFile(const std::string& path) {
    const std::string text = ReadFileBytes(path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("schema '" + path + "' is not valid JSON: " + e.what());
    }
    return FromJson(j);
  }

  void Validate() const {
    int targets = 0;
    std::set<std::string> seen;
    for (const auto& f : fields) {
      if (!seen.insert(f.column).second) {
        throw DataError("schema lists column '" + f.column + "' twice");
      }
      if (f.role == ColumnRole::kTarget) {
        ++targets;
        if (f.positive.empty()) {
          throw DataError("target '" + f.column + "' needs positive values");
        }
      }
      const auto& b = f.binning;
      if (b.kind == Binning::Kind::kNumeric) {
        if (b.edges.empty() ||
            !std::is_sorted(b.edges.begin(), b.edges.end()) ||
            std::adjacent_find(b.edges.begin(), b.edges.end()) !=
                b.edges.end()) {
          throw DataError("field '" + f.column +
                          "': numeric edges must be strictly ascending");
        }
        if (!b.labels.empty() && b.labels.size() != b.edges.size() + 1) {
          throw DataError("field '" + f.column +
                          "': need one label per bucket");
        }
      }
    }
    if (targets != 1) {
      throw DataError("schema must have exactly one target column, found " +
                      std::to_string(targets));
    }
    if (!header && column_names.empty()) {
      throw DataError("schema without header row must list column_names");
    }
  }
};

struct DatasetProvenance {
  std::vector<std::string> sources;
  std::vector<std::string> source_digests;
  std::string schema_name;
  std::string schema_digest;
  std::int64_t rows_read = 0;
  std::int64_t rows_filtered = 0;
  std::int64_t rows_missing = 0;
};

// Binary feature matrix (column-major) plus binary target.
class EncodedDataset {
 public:
  EncodedDataset() = default;

  EncodedDataset(std::vector<std::string> feature_names,
                 std::vector<int> feature_sources,
                 std::vector<std::string> source_fields,
                 std::vector<std::vector<std::uint8_t>> columns,
                 std::vector<std::uint8_t> target,
                 DatasetProvenance provenance = {},
                 std::optional<std::string> default_group = std::nullopt)
      : feature_names_(std::move(feature_names)),
        feature_sources_(std::move(feature_sources)),
        source_fields_(std::move(source_fields)),
        columns_(std::move(columns)),
        target_(std::move(target)),
        provenance_(std::move(provenance)),
        default_group_(std::move(default_group)) {
    if (target_.empty()) throw DataError("encoded dataset is empty");
    if (feature_names_.size() != columns_.size() ||
        feature_sources_.size() != columns_.size()) {
      throw DataError("feature metadata does not match columns");
    }
    for (std::size_t f = 0; f < columns_.size(); ++f) {
      if (columns_[f].size() != target_.size()) {
        throw DataError("column '" + feature_names_[f] + "' has wrong length");
      }
      for (auto v : columns_[f]) {
        if (v > 1) throw DataError("non-binary value in '" +
                                   feature_names_[f] + "'");
      }
    }
    for (auto v : target_) {
      if (v > 1) throw DataError("non-binary target value");
    }
    if (source_fields_.empty()) {
      source_fields_ = feature_names_;
      for (std::size_t f = 0; f < feature_sources_.size(); ++f) {
        feature_sources_[f] = static_cast<int>(f);
      }
    }
    provenance_.rows_read = std::max<std::int64_t>(
        provenance_.rows_read, static_cast<std::int64_t>(target_.size()));
  }

  // Convenience for small hand-built datasets: every feature is its own source.
  static EncodedDataset FromRows(
      std::vector<std::string> names,
      const std::vector<std::vector<std::uint8_t>>& rows,
      std::vector<std::uint8_t> target) {
    std::vector<std::vector<std::uint8_t>> cols(
        names.size(), std::vector<std::uint8_t>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != names.size()) {
        throw DataError("row " + std::to_string(r) + " has wrong width");
      }
      for (std::size_t f = 0; f < names.size(); ++f) cols[f][r] = rows[r][f];
    }
    std::vector<int> sources(names.size());
    return EncodedDataset(std::move(names), std::move(sources), {},
                          std::move(cols), std::move(target));
  }

  std::size_t rows() const { return target_.size(); }
  std::size_t features() const { return columns_.size(); }
  const std::vector<std::string>& feature_names() const {
    return feature_names_;
  }
  const std::string& feature_name(std::size_t f) const {
    return feature_names_.at(f);
  }
  // Index of the schema field a feature was derived from.
  int feature_source(std::size_t f) const { return feature_sources_.at(f); }
  const std::vector<std::string>& source_fields() const {
    return source_fields_;
  }
  std::span<const std::uint8_t> column(std::size_t f) const {
    return columns_.at(f);
  }
  std::uint8_t value(std::size_t row, std::size_t f) const {
    return columns_[f][row];
  }
  std::span<const std::uint8_t> target() const { return target_; }
  const DatasetProvenance& provenance() const { return provenance_; }
  const std::optional<std::string>& default_group() const {
    return default_group_;
  }

  std::optional<std::size_t> FindFeature(std::string_view name) const {
    for (std::size_t f = 0; f < feature_names_.size(); ++f) {
      if (feature_names_[f] == name) return f;
    }
    return std::nullopt;
  }

  std::size_t RequireFeature(std::string_view name) const {
    if (auto f = FindFeature(name)) return *f;
    throw DataError("no feature named '" + std::string(name) + "'");
  }

  std::vector<std::uint8_t> Row(std::size_t r) const {
    std::vector<std::uint8_t> out(columns_.size());
    for (std::size_t f = 0; f < columns_.size(); ++f) out[f] = columns_[f][r];
    return out;
  }

  // Digest over names, matrix and target; equal datasets hash equal.
  std::string ContentDigest() const {
    Sha256 h;
    for (const auto& n : feature_names_) h.Update(n).Update("\n");
    for (const auto& c : columns_) {
      h.Update(std::string_view(reinterpret_cast<const char*>(c.data()),
                                c.size()));
    }
    h.Update(std::string_view(reinterpret_cast<const char*>(target_.data()),
                              target_.size()));
    return h.HexDigest();
  }

  void WriteCsv(std::ostream& out) const {
    for (const auto& n : feature_names_) out << n << ',';
    out << "target\n";
    for (std::size_t r = 0; r < rows(); ++r) {
      for (const auto& c : columns_) out << static_cast<int>(c[r]) << ',';
      out << static_cast<int>(target_[r]) << '\n';
    }
  }

 private:
  std::vector<std::string> feature_names_;
  std::vector<int> feature_sources_;
  std::vector<std::string> source_fields_;
  std::vector<std::vector<std::uint8_t>> columns_;
  std::vector<std::uint8_t> target_;
  DatasetProvenance provenance_;
  std::optional<std::string> default_group_;
};

namespace internal {

inline std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::optional<double> ParseNumber(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string> SplitCsvLine(const std::string& line,
                                             bool trim) {
  using Separator = boost::escaped_list_separator<char>;
  // Backslash has no escape meaning in these files.
  boost::tokenizer<Separator> tokens(line, Separator('\0', ',', '"'));
  std::vector<std::string> cells;
  for (const auto& t : tokens) {
    cells.emplace_back(trim ? Trim(t) : std::string_view(t));
  }
  return cells;
}

inline std::string FormatEdge(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::vector<std::string> NumericLabels(const Binning& b) {
  if (!b.labels.empty()) return b.labels;
  std::vector<std::string> labels;
  labels.push_back("<" + FormatEdge(b.edges.front()));
  for (std::size_t i = 1; i < b.edges.size(); ++i) {
    labels.push_back("[" + FormatEdge(b.edges[i - 1]) + "," +
                     FormatEdge(b.edges[i]) + ")");
  }
  labels.push_back(">=" + FormatEdge(b.edges.back()));
  return labels;
}

// Bucket label for a raw value, or nullopt if the value is not covered.
inline std::optional<std::string> Bucket(const Binning& b,
                                         const std::string& raw) {
  switch (b.kind) {
    case Binning::Kind::kCategorical:
      if (!b.values.empty() &&
          std::find(b.values.begin(), b.values.end(), raw) == b.values.end()) {
        return std::nullopt;
      }
      return raw;
    case Binning::Kind::kNumeric: {
      auto v = ParseNumber(raw);
      if (!v) return std::nullopt;
      const auto labels = NumericLabels(b);
      const auto idx = static_cast<std::size_t>(
          std::upper_bound(b.edges.begin(), b.edges.end(), *v) -
          b.edges.begin());
      return labels[idx];
    }
    case Binning::Kind::kMap: {
      auto it = b.mapping.find(raw);
      if (it != b.mapping.end()) return it->second;
      return b.fallback;
    }
  }
  return std::nullopt;
}

}  // namespace internal

// Reads one or more files with the same layout (e.g. train and test
// partitions) and encodes them as a single dataset.
inline EncodedDataset LoadCsv(const std::vector<std::string>& paths,
                              const SchemaConfig& schema) {
  if (paths.empty()) throw DataError("no input files");
  DatasetProvenance prov;
  prov.schema_name = schema.name;
  prov.schema_digest = schema.digest;

  // Raw kept cells per field (schema order, drop-role fields excluded).
  std::vector<const FieldSpec*> kept;
  for (const auto& f : schema.fields) {
    if (f.role != ColumnRole::kDrop) kept.push_back(&f);
  }
  std::vector<std::vector<std::string>> raw(kept.size());
  const std::set<std::string> missing(schema.missing_markers.begin(),
                                      schema.missing_markers.end());

  for (const auto& path : paths) {
    const std::string bytes = ReadFileBytes(path);
    prov.sources.push_back(path);
    prov.source_digests.push_back(Sha256Hex(bytes));
    std::istringstream in(bytes);
    std::string line;
    std::int64_t line_no = 0;

    std::vector<std::string> names = schema.column_names;
    if (schema.header) {
      while (std::getline(in, line)) {
        ++line_no;
        if (!schema.skip_prefix.empty() && line.starts_with(schema.skip_prefix))
          continue;
        if (internal::Trim(line).empty()) continue;
        names = internal::SplitCsvLine(line, true);
        break;
      }
      if (names.empty()) throw DataError("'" + path + "' has no header row");
    }
    // Duplicate header names resolve to the first occurrence.
    auto index_of = [&](const std::string& col) -> std::size_t {
      auto it = std::find(names.begin(), names.end(), col);
      if (it == names.end()) {
        throw DataError("'" + path + "' has no column '" + col + "'");
      }
      return static_cast<std::size_t>(it - names.begin());
    };
    std::vector<std::size_t> kept_idx;
    for (const auto* f : kept) kept_idx.push_back(index_of(f->column));
    std::vector<std::size_t> filter_idx;
    for (const auto& rf : schema.filters) {
      filter_idx.push_back(index_of(rf.column));
    }

    while (std::getline(in, line)) {
      ++line_no;
      if (!schema.skip_prefix.empty() && line.starts_with(schema.skip_prefix))
        continue;
      if (internal::Trim(line).empty()) continue;
      auto cells = internal::SplitCsvLine(line, schema.trim_whitespace);
      if (cells.size() != names.size()) {
        throw DataError("'" + path + "' line " + std::to_string(line_no) +
                        ": expected " + std::to_string(names.size()) +
                        " fields, found " + std::to_string(cells.size()));
      }
      ++prov.rows_read;
      bool keep = true;
      for (std::size_t i = 0; i < schema.filters.size() && keep; ++i) {
        const auto& rf = schema.filters[i];
        const std::string& cell = cells[filter_idx[i]];
        if (std::find(rf.exclude.begin(), rf.exclude.end(), cell) !=
            rf.exclude.end()) {
          keep = false;
        }
        if (rf.min || rf.max) {
          auto v = internal::ParseNumber(cell);
          if (!v || (rf.min && *v < *rf.min) || (rf.max && *v > *rf.max)) {
            keep = false;
          }
        }
      }
      if (!keep) {
        ++prov.rows_filtered;
        continue;
      }
      bool has_missing = false;
      for (std::size_t k = 0; k < kept.size(); ++k) {
        if (missing.contains(cells[kept_idx[k]])) has_missing = true;
      }
      if (has_missing) {
        ++prov.rows_missing;
        continue;
      }
      for (std::size_t k = 0; k < kept.size(); ++k) {
        raw[k].push_back(std::move(cells[kept_idx[k]]));
      }
    }
  }

  const std::size_t n = raw.empty() ? 0 : raw.front().size();
  if (n == 0) {
    throw DataError("no rows left after filtering and missing-value removal");
  }

  std::vector<std::string> feature_names;
  std::vector<int> feature_sources;
  std::vector<std::string> source_fields;
  std::vector<std::vector<std::uint8_t>> columns;
  std::vector<std::uint8_t> target(n);

  for (std::size_t k = 0; k < kept.size(); ++k) {
    const FieldSpec& f = *kept[k];
    if (f.role == ColumnRole::kTarget) {
      for (std::size_t r = 0; r < n; ++r) {
        target[r] = std::find(f.positive.begin(), f.positive.end(),
                              raw[k][r]) != f.positive.end();
      }
      continue;
    }
    std::vector<std::string> buckets(n);
    std::set<std::string> offending;
    for (std::size_t r = 0; r < n; ++r) {
      auto b = internal::Bucket(f.binning, raw[k][r]);
      if (!b) {
        offending.insert(raw[k][r]);
      } else {
        buckets[r] = std::move(*b);
      }
    }
    if (!offending.empty()) {
      std::string list;
      for (const auto& v : offending) {
        if (!list.empty()) list += ", ";
        list += "'" + v + "'";
      }
      throw DataError("column '" + f.column +
                      "': values not covered by schema: " + list);
    }
    const int source = static_cast<int>(source_fields.size());
    source_fields.push_back(f.column);
    if (f.indicator) {
      feature_names.push_back(f.column + "=" + *f.indicator);
      feature_sources.push_back(source);
      std::vector<std::uint8_t> col(n);
      for (std::size_t r = 0; r < n; ++r) col[r] = buckets[r] == *f.indicator;
      columns.push_back(std::move(col));
      continue;
    }
    const std::set<std::string> labels(buckets.begin(), buckets.end());
    for (const auto& label : labels) {
      feature_names.push_back(f.column + "=" + label);
      feature_sources.push_back(source);
      std::vector<std::uint8_t> col(n);
      for (std::size_t r = 0; r < n; ++r) col[r] = buckets[r] == label;
      columns.push_back(std::move(col));
    }
  }

  return EncodedDataset(std::move(feature_names), std::move(feature_sources),
                        std::move(source_fields), std::move(columns),
                        std::move(target), std::move(prov), schema.group);
}

inline EncodedDataset LoadCsv(const std::string& path,
                              const SchemaConfig& schema) {
  return LoadCsv(std::vector<std::string>{path}, schema);
}

// 2x2 joint proportions of (group feature value, target).
struct GroupTargetTable {
  std::string feature;
  std::size_t rows = 0;
  // joint[g][t]: share of all rows with feature = g and target = t.
  double joint[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  double group_share[2] = {0.0, 0.0};
  double target_rate[2] = {0.0, 0.0};  // P(T=1 | feature = g)
};

inline GroupTargetTable ComputeGroupTargetTable(const EncodedDataset& d,
                                                std::string_view feature) {
  const std::size_t f = d.RequireFeature(feature);
  std::int64_t counts[2][2] = {{0, 0}, {0, 0}};
  const auto col = d.column(f);
  const auto y = d.target();
  for (std::size_t r = 0; r < d.rows(); ++r) ++counts[col[r]][y[r]];
  GroupTargetTable t;
  t.feature = std::string(feature);
  t.rows = d.rows();
  const auto n = static_cast<double>(d.rows());
  for (int g = 0; g < 2; ++g) {
    const std::int64_t size = counts[g][0] + counts[g][1];
    if (size == 0) {
      throw DataError("degenerate group: feature '" + std::string(feature) +
                      "' is constant");
    }
    for (int tv = 0; tv < 2; ++tv) {
      t.joint[g][tv] = static_cast<double>(counts[g][tv]) / n;
    }
    t.group_share[g] = static_cast<double>(size) / n;
    t.target_rate[g] =
        static_cast<double>(counts[g][1]) / static_cast<double>(size);
  }
  return t;
}

}  // namespace ssie
