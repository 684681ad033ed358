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

// Subset audit: split a dataset on every binary feature, measure how far a
// decision tree's predicted target rate falls from the observed rate on each
// side, and correlate that bias with predictors derived from the target rate
// and the leaf-size distribution.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ssie/dataset.hpp"
#include "ssie/decision_tree.hpp"
#include "ssie/digest.hpp"
#include "ssie/error.hpp"
#include "ssie/leaf_sizes.hpp"
#include "ssie/parallel.hpp"
#include "ssie/random.hpp"
#include "ssie/statistics.hpp"

namespace ssie {

// ---------------------------------------------------------------------------
// Evaluation protocols.

enum class ProtocolKind { kTrainOnAll, kCrossValidation, kHoldout };

struct EvaluationProtocol {
  ProtocolKind kind = ProtocolKind::kTrainOnAll;
  int folds = 5;
  double holdout_fraction = 0.3;
  std::uint64_t seed = 7;
  // Train separately on each side of a split instead of one shared model.
  bool per_subset = false;
  // Withhold every feature derived from the split's source column.
  bool exclude_split_feature = false;

  void Validate() const {
    if (kind == ProtocolKind::kCrossValidation && folds < 2) {
      throw UsageError("cross-validation needs at least 2 folds");
    }
    if (kind == ProtocolKind::kHoldout &&
        !(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
      throw UsageError("holdout fraction must lie in (0, 1)");
    }
  }

  std::string Name() const {
    std::string name;
    switch (kind) {
      case ProtocolKind::kTrainOnAll:
        name = "train-on-all";
        break;
      case ProtocolKind::kCrossValidation:
        name = "stratified-cv" + std::to_string(folds);
        break;
      case ProtocolKind::kHoldout:
        name = "stratified-holdout" +
               std::to_string(static_cast<int>(holdout_fraction * 100 + 0.5));
        break;
    }
    name += per_subset ? "/per-subset" : "/global";
    if (exclude_split_feature) name += "/exclude-split-feature";
    return name;
  }

  static ProtocolKind ParseKind(const std::string& s) {
    if (s == "train-on-all" || s == "train-all") return ProtocolKind::kTrainOnAll;
    if (s == "cv") return ProtocolKind::kCrossValidation;
    if (s == "holdout") return ProtocolKind::kHoldout;
    throw UsageError("unknown protocol '" + s +
                     "' (expected train-on-all, cv or holdout)");
  }
};

struct EvaluatedModel {
  DecisionTree tree;
  std::vector<std::uint32_t> training_rows;
  std::vector<int> training_leaves;  // leaf of each training row
};

struct Evaluation {
  // Per dataset row: predicted class, or -1 if the row was not evaluated.
  std::vector<std::int8_t> prediction;
  std::vector<EvaluatedModel> models;
  int attempts = 1;
};

namespace internal {

inline std::vector<std::uint32_t> AllRows(std::size_t n) {
  std::vector<std::uint32_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
  return rows;
}

// Shuffles each class separately and deals rows round-robin into k folds,
// continuing the deal across classes so fold sizes differ by at most one.
inline std::vector<std::vector<std::uint32_t>> StratifiedFolds(
    const EncodedDataset& d, std::span<const std::uint32_t> rows, int k,
    Rng& rng) {
  std::vector<std::uint32_t> by_class[2];
  for (auto r : rows) by_class[d.target()[r]].push_back(r);
  std::vector<std::vector<std::uint32_t>> folds(static_cast<std::size_t>(k));
  std::size_t dealt = 0;
  for (auto& members : by_class) {
    rng.Shuffle(std::span<std::uint32_t>(members));
    for (auto r : members) folds[dealt++ % folds.size()].push_back(r);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

inline bool HasBothClasses(const EncodedDataset& d,
                           std::span<const std::uint32_t> rows) {
  bool seen[2] = {false, false};
  for (auto r : rows) seen[d.target()[r]] = true;
  return seen[0] && seen[1];
}

inline EvaluatedModel Fit(const EncodedDataset& d, const TreeParams& params,
                          std::vector<std::uint32_t> training,
                          const std::vector<bool>& allowed) {
  DecisionTree tree = TrainTree(d, params, training, allowed);
  std::vector<int> leaves(training.size());
  for (std::size_t i = 0; i < training.size(); ++i) {
    leaves[i] = tree.Predict(d, training[i]).leaf;
  }
  return EvaluatedModel{std::move(tree), std::move(training),
                        std::move(leaves)};
}

}  // namespace internal

// Produces predictions for `rows` (all rows when empty) under `protocol`.
// A partition whose training rows hold a single class is reshuffled once
// with a fresh stream; a second failure is an error.
inline Evaluation Evaluate(const EncodedDataset& d, const TreeParams& params,
                           const EvaluationProtocol& protocol,
                           std::span<const std::uint32_t> rows = {},
                           const std::vector<bool>& allowed = {}) {
  protocol.Validate();
  std::vector<std::uint32_t> owned;
  if (rows.empty()) {
    owned = internal::AllRows(d.rows());
    rows = owned;
  }
  Evaluation ev;
  ev.prediction.assign(d.rows(), -1);

  if (protocol.kind == ProtocolKind::kTrainOnAll) {
    ev.models.push_back(internal::Fit(
        d, params, std::vector<std::uint32_t>(rows.begin(), rows.end()),
        allowed));
    const auto& m = ev.models.back();
    for (std::size_t i = 0; i < m.training_rows.size(); ++i) {
      ev.prediction[m.training_rows[i]] = static_cast<std::int8_t>(
          m.tree.nodes()[m.training_leaves[i]].predicted_class());
    }
    return ev;
  }

  // Partition into (train, test) pairs.
  std::vector<std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>>
      partitions;
  for (int attempt = 0; attempt < 2; ++attempt) {
    partitions.clear();
    Rng rng = Rng::ForStream(protocol.seed, static_cast<std::uint64_t>(attempt));
    if (protocol.kind == ProtocolKind::kCrossValidation) {
      auto folds = internal::StratifiedFolds(d, rows, protocol.folds, rng);
      for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<std::uint32_t> train;
        for (std::size_t g = 0; g < folds.size(); ++g) {
          if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
        }
        std::sort(train.begin(), train.end());
        partitions.emplace_back(std::move(train), folds[f]);
      }
    } else {
      std::vector<std::uint32_t> by_class[2];
      for (auto r : rows) by_class[d.target()[r]].push_back(r);
      std::vector<std::uint32_t> train;
      std::vector<std::uint32_t> test;
      for (auto& members : by_class) {
        rng.Shuffle(std::span<std::uint32_t>(members));
        const auto n_test = static_cast<std::size_t>(std::llround(
            protocol.holdout_fraction * static_cast<double>(members.size())));
        test.insert(test.end(), members.begin(), members.begin() + n_test);
        train.insert(train.end(), members.begin() + n_test, members.end());
      }
      std::sort(train.begin(), train.end());
      std::sort(test.begin(), test.end());
      partitions.emplace_back(std::move(train), std::move(test));
    }
    bool ok = true;
    for (const auto& [train, test] : partitions) {
      if (train.empty() || !internal::HasBothClasses(d, train)) ok = false;
    }
    ev.attempts = attempt + 1;
    if (ok) break;
    if (attempt == 1) {
      throw DataError("training partition under " + protocol.Name() +
                      " holds a single target class after reshuffling");
    }
  }

  for (auto& [train, test] : partitions) {
    ev.models.push_back(internal::Fit(d, params, std::move(train), allowed));
    const auto& tree = ev.models.back().tree;
    for (auto r : test) {
      ev.prediction[r] =
          static_cast<std::int8_t>(tree.Predict(d, r).predicted_class);
    }
  }
  return ev;
}

// ---------------------------------------------------------------------------
// Splits.

struct SubsetSplit {
  int id = 0;
  std::size_t feature = 0;
  std::string name;
  std::vector<std::uint32_t> rows[2];  // rows with feature = 0 / 1
  std::int64_t targets[2] = {0, 0};
  int minority_value = 1;

  int majority_value() const { return 1 - minority_value; }
  std::int64_t size(int value) const {
    return static_cast<std::int64_t>(rows[value].size());
  }
  double target_rate(int value) const {
    return static_cast<double>(targets[value]) /
           static_cast<double>(rows[value].size());
  }
};

struct SplitFilter {
  std::int64_t min_minority = 100;
};

struct RejectedSplit {
  std::string feature;
  std::string reason;
};

struct SplitEnumeration {
  std::vector<SubsetSplit> splits;
  std::vector<RejectedSplit> rejected;
};

// One candidate per binary feature (feature = 0 side vs feature = 1 side).
// A feature whose partition repeats an earlier feature's (equal or
// complementary column, e.g. the second column of a two-valued one-hot) is
// skipped as a duplicate. Survivors need a minority side of at least
// `min_minority` rows and a target occurrence on both sides.
inline SplitEnumeration EnumerateSplits(const EncodedDataset& d,
                                        const SplitFilter& filter = {}) {
  SplitEnumeration out;
  std::unordered_map<std::string, std::string> seen;
  const auto y = d.target();
  for (std::size_t f = 0; f < d.features(); ++f) {
    const auto col = d.column(f);
    // Canonical orientation: first row reads 0.
    std::string key(col.size(), '\0');
    for (std::size_t r = 0; r < col.size(); ++r) {
      key[r] = static_cast<char>(col[r] ^ col[0]);
    }
    const std::string digest = Sha256Hex(key);
    if (auto it = seen.find(digest); it != seen.end()) {
      out.rejected.push_back({d.feature_name(f), "duplicate of " + it->second});
      continue;
    }
    seen.emplace(digest, d.feature_name(f));

    SubsetSplit s;
    s.feature = f;
    s.name = d.feature_name(f);
    for (std::size_t r = 0; r < col.size(); ++r) {
      s.rows[col[r]].push_back(static_cast<std::uint32_t>(r));
      s.targets[col[r]] += y[r];
    }
    s.minority_value = s.rows[1].size() <= s.rows[0].size() ? 1 : 0;
    if (s.size(s.minority_value) < filter.min_minority) {
      out.rejected.push_back(
          {s.name, "minority side has " +
                       std::to_string(s.size(s.minority_value)) + " rows"});
      continue;
    }
    if (s.targets[0] == 0 || s.targets[1] == 0) {
      out.rejected.push_back({s.name, "a side has no target occurrences"});
      continue;
    }
    s.id = static_cast<int>(out.splits.size());
    out.splits.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-side measurements.

enum class Side { kMajority, kMinority };

inline const char* SideName(Side s) {
  return s == Side::kMajority ? "maj" : "min";
}

struct SidePredictors {
  double target_rate = 0.0;          // Tr
  double exponential_spread = 0.0;   // ES
  double es_with_target = 0.0;       // sum_i (p_i + Tr) / i
  double es_plus_target = 0.0;       // ES + Tr
  std::string histogram_digest;
  std::int64_t leaves = 0;
};

struct AuditRow {
  int subset_id = 0;
  std::string feature;
  Side side = Side::kMajority;
  int feature_value = 0;
  std::int64_t size = 0;
  std::int64_t evaluated = 0;  // rows that received a prediction
  double actual = 0.0;
  double predicted = 0.0;
  // (pred - act) / act; negative means underprediction.
  double bias = 0.0;
  SidePredictors predictors;

  // The same quantity oriented as a fall: positive means underprediction.
  double fall() const { return -bias; }
};

struct SplitMeasurement {
  AuditRow majority;
  AuditRow minority;
};

// Tr, ES and the two ES/Tr combinations from a side's pooled leaf-size
// histogram.
inline SidePredictors ComputePredictors(const LeafSizeHistogram& side_leaves,
                                        double target_rate,
                                        std::int64_t leaves) {
  SidePredictors p;
  p.target_rate = target_rate;
  p.exponential_spread = ExponentialSpread(side_leaves);
  p.es_with_target = ExponentialSpreadWithTarget(side_leaves, target_rate);
  p.es_plus_target = ExponentialSpreadPlusTarget(side_leaves, target_rate);
  std::string canonical;
  for (const auto& e : side_leaves.entries()) {
    canonical += std::to_string(e.size) + ":" + std::to_string(e.weight) + ";";
  }
  p.histogram_digest = Sha256Hex(canonical).substr(0, 16);
  p.leaves = leaves;
  return p;
}

namespace internal {

// Leaf sizes as seen by one side: each leaf's count of that side's training
// rows, pooled across the evaluation's models.
inline std::pair<LeafSizeHistogram, std::int64_t> SideLeafHistogram(
    const EncodedDataset& d, const Evaluation& ev, std::size_t feature,
    int value) {
  std::map<std::int64_t, double> mass;
  std::int64_t leaves = 0;
  const auto col = d.column(feature);
  for (const auto& m : ev.models) {
    std::vector<std::int64_t> counts(m.tree.nodes().size(), 0);
    for (std::size_t i = 0; i < m.training_rows.size(); ++i) {
      if (col[m.training_rows[i]] == value) ++counts[m.training_leaves[i]];
    }
    for (auto c : counts) {
      if (c > 0) {
        mass[c] += static_cast<double>(c);
        ++leaves;
      }
    }
  }
  return {LeafSizeHistogram::FromMass(mass), leaves};
}

inline std::vector<bool> FeatureMaskWithout(const EncodedDataset& d,
                                            std::size_t feature) {
  std::vector<bool> allowed(d.features(), true);
  for (std::size_t f = 0; f < d.features(); ++f) {
    if (d.feature_source(f) == d.feature_source(feature)) allowed[f] = false;
  }
  return allowed;
}

inline AuditRow MeasureSide(const EncodedDataset& d, const SubsetSplit& split,
                            int value, Side side, const Evaluation& ev) {
  AuditRow row;
  row.subset_id = split.id;
  row.feature = split.name;
  row.side = side;
  row.feature_value = value;
  row.size = split.size(value);
  std::int64_t targets = 0;
  std::int64_t predicted = 0;
  for (auto r : split.rows[value]) {
    if (ev.prediction[r] < 0) continue;
    ++row.evaluated;
    targets += d.target()[r];
    predicted += ev.prediction[r];
  }
  if (row.evaluated == 0 || targets == 0) {
    throw NumericalError("split '" + split.name + "' side " + SideName(side) +
                         ": no evaluated target occurrences");
  }
  row.actual =
      static_cast<double>(targets) / static_cast<double>(row.evaluated);
  row.predicted =
      static_cast<double>(predicted) / static_cast<double>(row.evaluated);
  row.bias = (row.predicted - row.actual) / row.actual;
  const auto [hist, leaves] = SideLeafHistogram(d, ev, split.feature, value);
  row.predictors = ComputePredictors(hist, split.target_rate(value), leaves);
  return row;
}

}  // namespace internal

// Measures both sides of `split`. With a shared global evaluation (the
// default protocol) pass it as `global`; otherwise the protocol's
// per-subset / feature-exclusion variants train their own models here.
inline SplitMeasurement MeasureBias(const EncodedDataset& d,
                                    const SubsetSplit& split,
                                    const TreeParams& params,
                                    const EvaluationProtocol& protocol,
                                    const Evaluation* global = nullptr) {
  std::vector<bool> allowed;
  if (protocol.exclude_split_feature) {
    allowed = internal::FeatureMaskWithout(d, split.feature);
  }
  const int maj = split.majority_value();
  const int min = split.minority_value;
  if (protocol.per_subset) {
    const Evaluation maj_ev = Evaluate(d, params, protocol, split.rows[maj], allowed);
    const Evaluation min_ev = Evaluate(d, params, protocol, split.rows[min], allowed);
    return {internal::MeasureSide(d, split, maj, Side::kMajority, maj_ev),
            internal::MeasureSide(d, split, min, Side::kMinority, min_ev)};
  }
  if (global != nullptr && !protocol.exclude_split_feature) {
    return {internal::MeasureSide(d, split, maj, Side::kMajority, *global),
            internal::MeasureSide(d, split, min, Side::kMinority, *global)};
  }
  const Evaluation ev = Evaluate(d, params, protocol, {}, allowed);
  return {internal::MeasureSide(d, split, maj, Side::kMajority, ev),
          internal::MeasureSide(d, split, min, Side::kMinority, ev)};
}

// ---------------------------------------------------------------------------
// Correlations.

inline constexpr const char* kMajTr = "Maj Tr";
inline constexpr const char* kMajEsTr = "Maj ES+Tr";
inline constexpr const char* kMinTr = "Min Tr";
inline constexpr const char* kMinEsTr = "Min ES+Tr";
inline constexpr const char* kDiffEsTr = "Diff ES+Tr";
inline constexpr const char* kFullTr = "Full Tr";
inline constexpr const char* kFullEsTr = "Full ES+Tr";

struct CorrelationCell {
  std::string name;
  std::optional<double> value;  // empty: undefined (zero variance / too few)
  std::size_t points = 0;
};

struct CorrelationReport {
  // Headline cells first (Maj Tr .. Full ES+Tr, ES+Tr summed per size), then
  // the additive Tr + ES variants and Diff Tr.
  std::vector<CorrelationCell> cells;
  std::size_t splits = 0;
  std::size_t sides = 0;
  std::string protocol;

  const CorrelationCell& Cell(const std::string& name) const {
    for (const auto& c : cells) {
      if (c.name == name) return c;
    }
    throw UsageError("no correlation cell '" + name + "'");
  }
};

inline constexpr std::size_t kMinCorrelationPoints = 3;

// Pearson correlation of each predictor with observed bias (signed so
// negative is underprediction) over splits. Diff cells correlate the
// minority-minus-majority predictor with the minority-minus-majority bias;
// Full cells pool both sides.
inline CorrelationReport Correlate(std::span<const SplitMeasurement> m,
                                   std::string protocol = "") {
  CorrelationReport report;
  report.splits = m.size();
  report.sides = 2 * m.size();
  report.protocol = std::move(protocol);

  using Getter = double (*)(const AuditRow&);
  const Getter tr = [](const AuditRow& r) { return r.predictors.target_rate; };
  const Getter es_tr = [](const AuditRow& r) {
    return r.predictors.es_with_target;
  };
  const Getter tr_es = [](const AuditRow& r) {
    return r.predictors.es_plus_target;
  };

  auto side_cell = [&](const std::string& name, bool minority, Getter g) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& s : m) {
      const AuditRow& r = minority ? s.minority : s.majority;
      x.push_back(g(r));
      y.push_back(r.bias);
    }
    report.cells.push_back(
        {name, PearsonCorrelation(x, y, kMinCorrelationPoints), x.size()});
  };
  auto diff_cell = [&](const std::string& name, Getter g) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& s : m) {
      x.push_back(g(s.minority) - g(s.majority));
      y.push_back(s.minority.bias - s.majority.bias);
    }
    report.cells.push_back(
        {name, PearsonCorrelation(x, y, kMinCorrelationPoints), x.size()});
  };
  auto full_cell = [&](const std::string& name, Getter g) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& s : m) {
      x.push_back(g(s.majority));
      y.push_back(s.majority.bias);
    }
    for (const auto& s : m) {
      x.push_back(g(s.minority));
      y.push_back(s.minority.bias);
    }
    report.cells.push_back(
        {name, PearsonCorrelation(x, y, kMinCorrelationPoints), x.size()});
  };

  side_cell(kMajTr, false, tr);
  side_cell(kMajEsTr, false, es_tr);
  side_cell(kMinTr, true, tr);
  side_cell(kMinEsTr, true, es_tr);
  diff_cell(kDiffEsTr, es_tr);
  full_cell(kFullTr, tr);
  full_cell(kFullEsTr, es_tr);

  side_cell("Maj Tr+ES (additive)", false, tr_es);
  side_cell("Min Tr+ES (additive)", true, tr_es);
  diff_cell("Diff Tr+ES (additive)", tr_es);
  full_cell("Full Tr+ES (additive)", tr_es);
  diff_cell("Diff Tr", tr);
  return report;
}

inline std::vector<std::string> HeadlineCells() {
  return {kMajTr, kMajEsTr, kMinTr, kMinEsTr, kDiffEsTr, kFullTr, kFullEsTr};
}

// ---------------------------------------------------------------------------
// Predictor-combination census.

struct PvcCensus {
  std::vector<std::int64_t> sizes;  // one per distinct feature vector
  LeafSizeHistogram histogram;
  double row_share_below_100 = 0.0;
  double pvc_share_below_100 = 0.0;
  std::optional<PowerLawFit> fit;
};

// Groups rows by their full feature vector and histograms group sizes.
inline PvcCensus PvcSizeCensus(const EncodedDataset& d) {
  std::map<std::vector<std::uint8_t>, std::int64_t> groups;
  for (std::size_t r = 0; r < d.rows(); ++r) ++groups[d.Row(r)];
  std::vector<std::int64_t> sizes;
  sizes.reserve(groups.size());
  for (const auto& [key, count] : groups) sizes.push_back(count);
  std::sort(sizes.begin(), sizes.end());
  std::int64_t rows_below = 0;
  std::int64_t pvcs_below = 0;
  for (auto s : sizes) {
    if (s < 100) {
      rows_below += s;
      ++pvcs_below;
    }
  }
  PvcCensus census{sizes, LeafSizeHistogram::FromLeafSizes(sizes),
                   static_cast<double>(rows_below) /
                       static_cast<double>(d.rows()),
                   static_cast<double>(pvcs_below) /
                       static_cast<double>(sizes.size()),
                   std::nullopt};
  try {
    census.fit = FitPowerLaw(sizes);
  } catch (const NumericalError&) {
    // All PVCs the same size; no exponent to report.
  }
  return census;
}

// ---------------------------------------------------------------------------
// Whole audit.

struct AuditConfig {
  TreeParams tree;
  EvaluationProtocol protocol;
  SplitFilter filter;
  unsigned threads = 1;
  std::optional<std::string> group;  // defaults to the schema's group
};

struct AuditResult {
  std::string dataset;
  std::string content_digest;
  DatasetProvenance provenance;
  AuditConfig config;
  SplitEnumeration enumeration;
  std::vector<SplitMeasurement> measurements;
  // Splits the protocol could not evaluate (e.g. a side whose few targets
  // all fall outside every training partition).
  std::vector<RejectedSplit> unmeasured;
  CorrelationReport correlations;
  std::optional<GroupTargetTable> group_table;
  std::optional<SplitMeasurement> group_measurement;
  PvcCensus census;
  std::size_t global_tree_leaves = 0;
};

inline AuditResult RunAudit(const EncodedDataset& d, const AuditConfig& config) {
  config.tree.Validate();
  config.protocol.Validate();
  SplitEnumeration enumeration = EnumerateSplits(d, config.filter);

  std::optional<Evaluation> global;
  if (!config.protocol.per_subset && !config.protocol.exclude_split_feature) {
    global = Evaluate(d, config.tree, config.protocol);
  }
  std::vector<std::optional<SplitMeasurement>> measured(
      enumeration.splits.size());
  std::vector<std::string> failures(enumeration.splits.size());
  ParallelFor(enumeration.splits.size(), config.threads, [&](std::size_t i) {
    try {
      measured[i] = MeasureBias(d, enumeration.splits[i], config.tree,
                                config.protocol, global ? &*global : nullptr);
    } catch (const DataError& e) {
      failures[i] = e.what();
    } catch (const NumericalError& e) {
      failures[i] = e.what();
    }
  });
  std::vector<SplitMeasurement> measurements;
  std::vector<RejectedSplit> unmeasured;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    if (measured[i]) {
      measurements.push_back(std::move(*measured[i]));
    } else {
      unmeasured.push_back({enumeration.splits[i].name, failures[i]});
    }
  }

  AuditResult result{d.provenance().schema_name,
                     d.ContentDigest(),
                     d.provenance(),
                     config,
                     std::move(enumeration),
                     std::move(measurements),
                     std::move(unmeasured),
                     {},
                     std::nullopt,
                     std::nullopt,
                     PvcSizeCensus(d),
                     0};
  result.correlations =
      Correlate(result.measurements, config.protocol.Name());
  if (global) {
    for (const auto& m : global->models) {
      result.global_tree_leaves += m.tree.Leaves().size();
    }
  }
  const auto group = config.group ? config.group : d.default_group();
  if (group) {
    result.group_table = ComputeGroupTargetTable(d, *group);
    const std::size_t f = d.RequireFeature(*group);
    for (const auto& m : result.measurements) {
      const auto& s =
          result.enumeration.splits[static_cast<std::size_t>(m.majority.subset_id)];
      if (s.feature == f) result.group_measurement = m;
    }
    if (!result.group_measurement) {
      // The group column repeats an earlier split, was filtered, or could not
      // be measured; try it directly and leave it empty on failure.
      SubsetSplit s;
      s.id = -1;
      s.feature = f;
      s.name = *group;
      const auto col = d.column(f);
      for (std::size_t r = 0; r < d.rows(); ++r) {
        s.rows[col[r]].push_back(static_cast<std::uint32_t>(r));
        s.targets[col[r]] += d.target()[r];
      }
      s.minority_value = s.rows[1].size() <= s.rows[0].size() ? 1 : 0;
      try {
        result.group_measurement =
            MeasureBias(d, s, config.tree, config.protocol,
                        global ? &*global : nullptr);
      } catch (const NumericalError&) {
      } catch (const DataError&) {
      }
    }
  }
  return result;
}

}  // namespace ssie
