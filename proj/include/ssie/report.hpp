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

// Text renderings of results: CSV tables (header row, '.' decimals, LF
// endings), JSON documents, and fixed-width tables for a terminal. Doubles
// are written in shortest round-trip form so identical runs produce
// byte-identical files.

#pragma once

#include <charconv>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssie/analytic_model.hpp"
#include "ssie/audit.hpp"
#include "ssie/inference.hpp"

namespace ssie {

using OrderedJson = nlohmann::ordered_json;

inline std::string FormatDouble(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string FormatFixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  std::string out = buf;
  // Tiny negatives print as "-0.00"; drop the sign.
  if (out.front() == '-' &&
      out.find_first_not_of("-0.") == std::string::npos) {
    out.erase(0, 1);
  }
  return out;
}

inline std::string FormatPercent(double v, int digits = 1) {
  return FormatFixed(100.0 * v, digits) + "%";
}

inline OrderedJson OptionalJson(const std::optional<double>& v) {
  return v ? OrderedJson(*v) : OrderedJson(nullptr);
}

// ---------------------------------------------------------------------------
// Curves and simulation tables.

inline void WriteCurveCsv(std::ostream& out, const std::string& x_name,
                          const std::string& value_name,
                          std::span<const CurvePoint> points) {
  out << x_name << ',' << value_name << '\n';
  for (const auto& p : points) {
    out << FormatDouble(p.x) << ',' << FormatDouble(p.value) << '\n';
  }
}

inline void WriteGeneratingTableCsv(std::ostream& out,
                                    const GeneratingProbabilityTable& t) {
  out << "K,Pr,P,hits,rule_of_succession\n";
  for (const auto& r : t.rows) {
    out << r.successes << ',' << FormatDouble(r.sample_proportion) << ',';
    if (r.mean_generating_probability) {
      out << FormatDouble(*r.mean_generating_probability);
    }
    out << ',' << r.hits << ','
        << FormatDouble(RuleOfSuccession(SampleCount(r.successes, t.trials)))
        << '\n';
  }
}

inline void PrintGeneratingTable(std::ostream& out,
                                 const GeneratingProbabilityTable& t) {
  out << "N=" << t.trials << "  iterations=" << t.iterations
      << "  seed=" << t.seed << '\n';
  out << "   K     Pr      P    RoS    hits\n";
  for (const auto& r : t.rows) {
    char line[96];
    const std::string p = r.mean_generating_probability
                              ? FormatFixed(*r.mean_generating_probability, 3)
                              : std::string("  -  ");
    std::snprintf(line, sizeof(line), "%4lld  %5.3f  %5s  %5.3f  %6lld\n",
                  static_cast<long long>(r.successes), r.sample_proportion,
                  p.c_str(),
                  RuleOfSuccession(SampleCount(r.successes, t.trials)),
                  static_cast<long long>(r.hits));
    out << line;
  }
}

// ---------------------------------------------------------------------------
// Single-PVC scenario.

inline OrderedJson ToJson(const PvcGroupResult& g) {
  OrderedJson j;
  j["label"] = g.label;
  j["group_fraction"] = g.group_fraction;
  j["group_size"] = g.group_size;
  j["pvc_count"] = g.pvc_count;
  j["degenerate"] = g.degenerate;
  j["conditional"] = g.conditional;
  if (g.conditional_exact) {
    j["conditional_exact"] = std::to_string(g.conditional_exact->numerator()) +
                             "/" +
                             std::to_string(g.conditional_exact->denominator());
  }
  j["actual_within_group"] = g.actual_within_group;
  j["predicted_within_group"] = g.predicted_within_group;
  j["actual_target1"] = g.actual_target1;
  j["predicted_target1"] = g.predicted_target1;
  j["predicted_target0"] = g.predicted_target0;
  j["relative_fall"] = OptionalJson(g.relative_fall);
  OrderedJson r;
  r["conditional"] = g.rounded.conditional;
  r["predicted_within_group"] = g.rounded.predicted_within_group;
  r["predicted_target1"] = g.rounded.predicted_target1;
  r["predicted_target0"] = g.rounded.predicted_target0;
  r["actual_target1"] = g.rounded.actual_target1;
  r["relative_fall"] = OptionalJson(g.rounded.relative_fall);
  j["two_decimal_cells"] = r;
  return j;
}

inline OrderedJson ToJson(const PvcScenario& s, const PvcScenarioResult& r) {
  OrderedJson j;
  j["scenario"] = {{"total", s.total},
                   {"minority_fraction", s.minority_fraction},
                   {"majority_rate", s.majority_rate},
                   {"minority_rate", s.minority_rate},
                   {"prior_a", s.prior.a()},
                   {"prior_b", s.prior.b()}};
  j["majority"] = ToJson(r.majority);
  j["minority"] = ToJson(r.minority);
  j["note"] =
      "relative_fall compares unrounded predicted and actual within-group "
      "rates; two_decimal_cells.relative_fall compares joint cells after "
      "rounding to two decimals, which inflates small cells (e.g. 0.03 vs "
      "0.04 reads as a 25% fall where the unrounded fall is 1 - 5/6).";
  return j;
}

inline void PrintScenario(std::ostream& out, const PvcScenario& s,
                          const PvcScenarioResult& r) {
  out << "Sample N=" << s.total << "  R=" << s.minority_fraction
      << "  S1=" << s.majority_rate << "  S2=" << s.minority_rate
      << "  prior=Beta(" << s.prior.a() << "," << s.prior.b() << ")\n\n";
  out << "Counts (rows with X=1, all targets)\n";
  out << "  majority: " << r.majority.pvc_count
      << "   minority: " << r.minority.pvc_count << "\n\n";
  out << "Conditional P(T=1|X=1,G)\n";
  for (const auto* g : {&r.majority, &r.minority}) {
    out << "  " << g->label << ": " << FormatFixed(g->conditional, 4);
    if (g->conditional_exact) {
      out << " (" << g->conditional_exact->numerator() << "/"
          << g->conditional_exact->denominator() << ")";
    }
    if (g->degenerate) out << " [no X=1 rows: prior mean]";
    out << "  predicted within group " << FormatFixed(g->predicted_within_group, 4)
        << " (two-decimal conditional: "
        << FormatFixed(g->rounded.predicted_within_group, 3) << ")\n";
  }
  auto fall = [](const std::optional<double>& f) {
    return f ? FormatPercent(*f, 1) + " fall" : std::string("n/a");
  };
  out << "\nPredicted proportion table (two decimals)\n";
  out << "              Maj                     Min\n";
  out << "  Target=0    " << FormatFixed(r.majority.rounded.predicted_target0, 2)
      << "                    "
      << FormatFixed(r.minority.rounded.predicted_target0, 2) << '\n';
  out << "  Target=1    " << FormatFixed(r.majority.rounded.predicted_target1, 2)
      << " (" << fall(r.majority.rounded.relative_fall) << ")      "
      << FormatFixed(r.minority.rounded.predicted_target1, 2) << " ("
      << fall(r.minority.rounded.relative_fall) << ")\n";
  out << "\nUnrounded falls: majority " << fall(r.majority.relative_fall)
      << ", minority " << fall(r.minority.relative_fall) << '\n';
  out << "(two-decimal falls compare rounded joint cells; the unrounded "
         "figures are the exact relative shortfall)\n";
}

// ---------------------------------------------------------------------------
// Audit.

inline OrderedJson ToJson(const TreeParams& p) {
  OrderedJson j;
  j["criterion"] = "gini";
  j["max_depth"] = p.max_depth ? OrderedJson(*p.max_depth) : OrderedJson(nullptr);
  j["min_samples_split"] = p.min_samples_split;
  j["min_samples_leaf"] = p.min_samples_leaf;
  j["tie_break"] = "lowest feature index";
  return j;
}

inline OrderedJson ToJson(const EvaluationProtocol& p) {
  OrderedJson j;
  j["name"] = p.Name();
  j["folds"] = p.folds;
  j["holdout_fraction"] = p.holdout_fraction;
  j["seed"] = p.seed;
  j["per_subset"] = p.per_subset;
  j["exclude_split_feature"] = p.exclude_split_feature;
  return j;
}

inline OrderedJson ToJson(const AuditRow& r) {
  OrderedJson j;
  j["subset_id"] = r.subset_id;
  j["feature"] = r.feature;
  j["side"] = SideName(r.side);
  j["feature_value"] = r.feature_value;
  j["size"] = r.size;
  j["evaluated"] = r.evaluated;
  j["actual"] = r.actual;
  j["predicted"] = r.predicted;
  j["bias"] = r.bias;
  j["fall"] = r.fall();
  j["tr"] = r.predictors.target_rate;
  j["es"] = r.predictors.exponential_spread;
  j["es_tr"] = r.predictors.es_with_target;
  j["tr_plus_es"] = r.predictors.es_plus_target;
  j["leaves"] = r.predictors.leaves;
  j["histogram_digest"] = r.predictors.histogram_digest;
  return j;
}

inline OrderedJson ToJson(const CorrelationReport& c) {
  OrderedJson j;
  j["protocol"] = c.protocol;
  j["splits"] = c.splits;
  j["sides"] = c.sides;
  OrderedJson cells = OrderedJson::array();
  for (const auto& cell : c.cells) {
    cells.push_back({{"cell", cell.name},
                     {"pearson", OptionalJson(cell.value)},
                     {"points", cell.points}});
  }
  j["cells"] = cells;
  return j;
}

inline OrderedJson ToJson(const GroupTargetTable& t) {
  OrderedJson j;
  j["feature"] = t.feature;
  j["rows"] = t.rows;
  for (int g = 0; g < 2; ++g) {
    const std::string key = t.feature + "=" + std::to_string(g);
    j["groups"][key] = {{"share", t.group_share[g]},
                        {"target0_joint", t.joint[g][0]},
                        {"target1_joint", t.joint[g][1]},
                        {"target_rate", t.target_rate[g]}};
  }
  return j;
}

inline OrderedJson ToJson(const PvcCensus& c) {
  OrderedJson j;
  j["distinct_pvcs"] = c.sizes.size();
  j["largest_pvc"] = c.sizes.empty() ? 0 : c.sizes.back();
  j["row_share_in_pvcs_below_100"] = c.row_share_below_100;
  j["pvc_share_below_100"] = c.pvc_share_below_100;
  if (c.fit) {
    j["power_law_exponent"] = c.fit->exponent;
    j["power_law_log_likelihood"] = c.fit->log_likelihood;
  } else {
    j["power_law_exponent"] = nullptr;
  }
  OrderedJson hist = OrderedJson::array();
  for (const auto& e : c.histogram.entries()) {
    hist.push_back({e.size, e.weight});
  }
  j["histogram"] = hist;
  return j;
}

inline OrderedJson ToJson(const AuditResult& a) {
  OrderedJson j;
  j["dataset"] = a.dataset;
  j["content_digest"] = a.content_digest;
  j["sources"] = a.provenance.sources;
  j["source_digests"] = a.provenance.source_digests;
  j["schema_digest"] = a.provenance.schema_digest;
  j["rows_read"] = a.provenance.rows_read;
  j["rows_filtered"] = a.provenance.rows_filtered;
  j["rows_dropped_missing"] = a.provenance.rows_missing;
  j["seed"] = a.config.protocol.seed;
  j["protocol"] = ToJson(a.config.protocol);
  j["tree"] = ToJson(a.config.tree);
  j["min_minority"] = a.config.filter.min_minority;
  j["splits_surviving"] = a.enumeration.splits.size();
  j["sides_surviving"] = 2 * a.enumeration.splits.size();
  j["splits_measured"] = a.measurements.size();
  OrderedJson rejected = OrderedJson::array();
  for (const auto& r : a.enumeration.rejected) {
    rejected.push_back({{"feature", r.feature}, {"reason", r.reason}});
  }
  j["splits_rejected"] = rejected;
  OrderedJson unmeasured = OrderedJson::array();
  for (const auto& r : a.unmeasured) {
    unmeasured.push_back({{"feature", r.feature}, {"reason", r.reason}});
  }
  j["splits_unmeasured"] = unmeasured;
  j["correlations"] = ToJson(a.correlations);
  if (a.group_table) j["group_table"] = ToJson(*a.group_table);
  if (a.group_measurement) {
    j["group_bias"] = {{"majority", ToJson(a.group_measurement->majority)},
                       {"minority", ToJson(a.group_measurement->minority)}};
  }
  OrderedJson rows = OrderedJson::array();
  for (const auto& m : a.measurements) {
    rows.push_back(ToJson(m.majority));
    rows.push_back(ToJson(m.minority));
  }
  j["rows"] = rows;
  j["pvc_census"] = ToJson(a.census);
  j["bias_sign"] =
      "bias = (pred - act) / act, negative is underprediction; fall = -bias";
  j["diff_definition"] =
      "Diff cells: (minority predictor - majority predictor) vs (minority "
      "bias - majority bias)";
  return j;
}

inline void WriteAuditRowsCsv(std::ostream& out, const AuditResult& a) {
  out << "subset_id,feature,side,feature_value,size,evaluated,actual,"
         "predicted,bias,fall,tr,es,es_tr,tr_plus_es,leaves,histogram_digest\n";
  for (const auto& m : a.measurements) {
    for (const auto* r : {&m.majority, &m.minority}) {
      out << r->subset_id << ',' << r->feature << ',' << SideName(r->side)
          << ',' << r->feature_value << ',' << r->size << ',' << r->evaluated
          << ',' << FormatDouble(r->actual) << ','
          << FormatDouble(r->predicted) << ',' << FormatDouble(r->bias) << ','
          << FormatDouble(r->fall()) << ','
          << FormatDouble(r->predictors.target_rate) << ','
          << FormatDouble(r->predictors.exponential_spread) << ','
          << FormatDouble(r->predictors.es_with_target) << ','
          << FormatDouble(r->predictors.es_plus_target) << ','
          << r->predictors.leaves << ',' << r->predictors.histogram_digest
          << '\n';
    }
  }
}

// Majority/minority cells and Diff/Full cells as two header+row blocks per
// dataset, one CSV per block.
inline void WriteCorrelationCsv(std::ostream& out,
                                std::span<const std::string> names,
                                std::span<const CorrelationReport* const> reports,
                                std::span<const std::string> cells) {
  out << "data";
  for (const auto& c : cells) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out << names[i];
    for (const auto& c : cells) {
      out << ',';
      const auto& v = reports[i]->Cell(c).value;
      if (v) out << FormatDouble(*v);
    }
    out << '\n';
  }
}

inline std::string FormatCorrelation(const std::optional<double>& v) {
  return v ? FormatFixed(*v, 2) : std::string("undef");
}

inline void PrintAuditSummary(std::ostream& out, const AuditResult& a) {
  out << "Dataset " << a.dataset << ": " << a.provenance.rows_read
      << " rows read, " << a.provenance.rows_filtered << " filtered, "
      << a.provenance.rows_missing << " dropped for missing values\n";
  out << "Protocol " << a.config.protocol.Name() << ", seed "
      << a.config.protocol.seed << '\n';
  out << "Splits surviving filter: " << a.enumeration.splits.size() << " ("
      << 2 * a.enumeration.splits.size() << " sides), rejected "
      << a.enumeration.rejected.size() << '\n';
  if (!a.unmeasured.empty()) {
    out << "Splits not measurable under this protocol: " << a.unmeasured.size()
        << '\n';
    for (const auto& r : a.unmeasured) {
      out << "  " << r.feature << ": " << r.reason << '\n';
    }
  }
  if (a.group_table) {
    const auto& t = *a.group_table;
    out << "\nGroup table for " << t.feature << '\n';
    for (int g = 1; g >= 0; --g) {
      out << "  " << t.feature << "=" << g
          << ": Target=0 " << FormatFixed(t.joint[g][0], 2)
          << "  Target=1 " << FormatFixed(t.joint[g][1], 2) << " ("
          << FormatPercent(t.target_rate[g], 0) << ")\n";
    }
  }
  if (a.group_measurement) {
    out << "\nGroup bias (" << a.group_measurement->majority.feature << ")\n";
    for (const auto* r :
         {&a.group_measurement->majority, &a.group_measurement->minority}) {
      out << "  " << SideName(r->side) << " (" << r->feature << "="
          << r->feature_value << "): actual " << FormatPercent(r->actual)
          << " predicted " << FormatPercent(r->predicted) << " bias "
          << FormatFixed(r->bias, 4) << " (" << FormatPercent(r->fall())
          << " fall) ES " << FormatFixed(r->predictors.exponential_spread, 4)
          << '\n';
    }
  }
  out << "\nCorrelations between observed bias and predictors\n";
  out << "  Maj Tr  Maj ES+Tr  Min Tr  Min ES+Tr | Diff ES+Tr  Full Tr  "
         "Full ES+Tr\n  ";
  const auto cells = HeadlineCells();
  const int widths[] = {6, 9, 6, 9, 10, 7, 10};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::string v = FormatCorrelation(a.correlations.Cell(cells[i]).value);
    out << std::string(static_cast<std::size_t>(widths[i]) - std::min<std::size_t>(v.size(), static_cast<std::size_t>(widths[i])), ' ')
        << v << (i == 3 ? " | " : "  ");
  }
  out << '\n';
  out << "  additive Tr+ES: Maj "
      << FormatCorrelation(a.correlations.Cell("Maj Tr+ES (additive)").value)
      << "  Min "
      << FormatCorrelation(a.correlations.Cell("Min Tr+ES (additive)").value)
      << "  Diff "
      << FormatCorrelation(a.correlations.Cell("Diff Tr+ES (additive)").value)
      << "  Full "
      << FormatCorrelation(a.correlations.Cell("Full Tr+ES (additive)").value)
      << '\n';
  out << "\nPVC census: " << a.census.sizes.size() << " distinct, "
      << FormatPercent(a.census.row_share_below_100)
      << " of rows in PVCs smaller than 100";
  if (a.census.fit) {
    out << ", fitted exponent " << FormatFixed(a.census.fit->exponent, 3);
  }
  out << '\n';
}

}  // namespace ssie
