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


// Acceptance run: one PASS/FAIL line per criterion, with timings and the
// measured values. Exits nonzero when a criterion fails that is not listed
// in kExpectedFailures, or when a listed one unexpectedly passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ssie/ssie.hpp"

namespace {

using namespace ssie;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Criteria known not to be met with the bundled preprocessing; each is
// reported as FAIL with its analysis rather than loosened.
const std::set<int> kExpectedFailures = {7};

const std::string kData = SSIE_DATA_DIR;
const std::string kSchemas = SSIE_SCHEMA_DIR;

std::string Fmt(double v, int digits = 3) { return FormatFixed(v, digits); }

// ---------------------------------------------------------------------------

Outcome SmallSampleTable() {
  const double n16[][2] = {{0, .06}, {4, .28}, {8, .50}, {12, .72}, {16, .94}};
  const double n4[][2] = {{0, .17}, {1, .33}, {2, .50}, {3, .67}, {4, .83}};
  Outcome o{true, ""};
  double worst_table = 0.0;
  for (auto [n, cells] : {std::pair{16, &n16}, std::pair{4, &n4}}) {
    const auto t = SimulateGeneratingProbabilities(n, 10000, 7);
    for (const auto& [k, p] : *cells) {
      const auto& m = t.rows[static_cast<std::size_t>(k)].mean_generating_probability;
      const double err = m ? std::abs(*m - p) : 1.0;
      worst_table = std::max(worst_table, err);
    }
  }
  double worst_ros = 0.0;
  for (int n : {16, 4}) {
    const auto t = SimulateGeneratingProbabilities(n, 100000, 7);
    for (const auto& row : t.rows) {
      const double err =
          row.mean_generating_probability
              ? std::abs(*row.mean_generating_probability -
                         RuleOfSuccession(SampleCount(row.successes, n)))
              : 1.0;
      worst_ros = std::max(worst_ros, err);
    }
  }
  o.pass = worst_table <= 0.02 && worst_ros <= 0.01;
  o.detail = "max |P - reference| at 10k = " + Fmt(worst_table, 4) +
             " (<= 0.02), max |P - RoS| at 100k = " + Fmt(worst_ros, 4) +
             " (<= 0.01)";
  return o;
}

Outcome EqualRateScenario() {
  PvcScenario s;
  s.total = 100;
  s.minority_fraction = 0.2;
  s.majority_rate = 0.2;
  s.minority_rate = 0.2;
  const auto r = SinglePvcScenario(s);
  const auto json = ToJson(s, r);
  const bool exact = r.majority.conditional_exact == Fraction(17, 18) &&
                     r.minority.conditional_exact == Fraction(5, 6);
  const bool within = std::abs(r.majority.rounded.predicted_within_group - 0.188) < 1e-12 &&
                      std::abs(r.minority.rounded.predicted_within_group - 0.166) < 1e-12;
  const bool cells = r.majority.rounded.predicted_target1 == 0.15 &&
                     r.minority.rounded.predicted_target1 == 0.03;
  const bool falls = std::abs(*r.minority.relative_fall - 1.0 / 6.0) < 1e-12 &&
                     std::abs(*r.minority.rounded.relative_fall - 0.25) < 1e-12 &&
                     json.contains("note");
  return {exact && within && cells && falls,
          "conditionals 17/18, 5/6; within-group 0.188/0.166; cells " +
              Fmt(r.majority.rounded.predicted_target1, 2) + "/" +
              Fmt(r.minority.rounded.predicted_target1, 2) +
              "; minority fall unrounded " +
              FormatPercent(*r.minority.relative_fall) + " vs two-decimal " +
              FormatPercent(*r.minority.rounded.relative_fall)};
}

Outcome AdultRatesScenario() {
  PvcScenario s;
  s.minority_fraction = 0.33;
  s.majority_rate = 0.30;
  s.minority_rate = 0.12;
  const auto r = SinglePvcScenario(s);
  return {r.majority.rounded.predicted_target1 == 0.19 &&
              r.minority.rounded.predicted_target1 == 0.03,
          "cells " + Fmt(r.majority.rounded.predicted_target1, 2) + "/" +
              Fmt(r.minority.rounded.predicted_target1, 2) +
              " (R=0.33, S1=0.30, S2=0.12)"};
}

double EnumeratedThreshold(int f, double p) {
  double total = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << f); ++mask) {
    const int k = __builtin_popcount(mask);
    if (2 * k > f) total += std::pow(p, k) * std::pow(1 - p, f - k);
  }
  return total;
}

Outcome ThresholdModel() {
  using Support = LeafSizeDistribution::Support;
  bool singleton = true;
  for (int i = 1; i <= 99; ++i) {
    singleton &= ThresholdPredictedRate(1, i / 100.0) == i / 100.0;
  }
  double worst_enum = 0.0;
  for (int f = 1; f <= 12; ++f) {
    for (int i = 0; i <= 100; ++i) {
      worst_enum = std::max(worst_enum,
                            std::abs(ThresholdPredictedRate(f, i / 100.0) -
                                     EnumeratedThreshold(f, i / 100.0)));
    }
  }
  int combos = 0;
  int direction_failures = 0;
  int monotone_failures = 0;
  for (std::int64_t n : {11, 51, 101, 501}) {
    for (int i = 1; i <= 99; ++i) {
      const double p = i / 100.0;
      if (i == 50) continue;
      double previous_gap = INFINITY;
      for (double x : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
        const double rate =
            ThresholdGroupRate(LeafSizeDistribution(x, n, Support::kOddOnly), p);
        ++combos;
        if (p < 0.5 ? !(rate < p) : !(rate > p)) ++direction_failures;
        const double gap = std::abs(rate - p);
        if (!(gap < previous_gap)) ++monotone_failures;
        previous_gap = gap;
      }
    }
  }
  return {singleton && worst_enum < 1e-12 && direction_failures == 0 &&
              monotone_failures == 0,
          "F=1 exact on 99 points: " + std::string(singleton ? "yes" : "no") +
              "; max enumeration error F<=12: " + FormatDouble(worst_enum) +
              "; " + std::to_string(combos) +
              " (p, X, N) combinations, direction failures " +
              std::to_string(direction_failures) + ", gap-monotonicity failures " +
              std::to_string(monotone_failures)};
}

// Recursive Gini tree used as the brute-force reference.
struct RefNode {
  int feature = -1;
  std::int64_t size = 0;
  std::int64_t targets = 0;
  std::vector<RefNode> children;
};

RefNode RefTrain(const std::vector<std::vector<std::uint8_t>>& x,
                 const std::vector<std::uint8_t>& y, const std::vector<int>& rows,
                 int features) {
  RefNode node;
  node.size = static_cast<std::int64_t>(rows.size());
  for (int r : rows) node.targets += y[r];
  if (node.targets == 0 || node.targets == node.size) return node;
  int best = -1;
  std::int64_t best_num = 0;
  std::int64_t best_den = 1;
  for (int f = 0; f < features; ++f) {
    std::int64_t n[2] = {0, 0};
    std::int64_t p[2] = {0, 0};
    for (int r : rows) {
      ++n[x[r][f]];
      p[x[r][f]] += y[r];
    }
    if (n[0] == 0 || n[1] == 0) continue;
    const std::int64_t num = p[0] * (n[0] - p[0]) * n[1] + p[1] * (n[1] - p[1]) * n[0];
    const std::int64_t den = n[0] * n[1];
    if (best < 0 || num * best_den < best_num * den) {
      best = f;
      best_num = num;
      best_den = den;
    }
  }
  if (best < 0) return node;
  node.feature = best;
  std::vector<int> split[2];
  for (int r : rows) split[x[r][best]].push_back(r);
  node.children.push_back(RefTrain(x, y, split[0], features));
  node.children.push_back(RefTrain(x, y, split[1], features));
  return node;
}

bool SameTree(const DecisionTree& t, int n, const RefNode& ref) {
  const auto& node = t.nodes()[n];
  if (node.feature != ref.feature || node.size != ref.size ||
      node.target_count != ref.targets) {
    return false;
  }
  if (ref.feature < 0) return true;
  return SameTree(t, node.zero_child, ref.children[0]) &&
         SameTree(t, node.one_child, ref.children[1]);
}

Outcome AnalyticInvariants() {
  // Rule of succession pulls every proportion toward 0.5.
  int ros_failures = 0;
  for (std::int64_t n = 1; n <= 100; ++n) {
    for (std::int64_t k = 0; k <= n; ++k) {
      const double pr = static_cast<double>(k) / n;
      const double ros = RuleOfSuccession(SampleCount(k, n));
      if (2 * k != n && !(std::abs(ros - 0.5) < std::abs(pr - 0.5))) ++ros_failures;
    }
  }
  // Regression shrinks as N grows at a fixed proportion.
  for (int q = 0; q <= 4; ++q) {
    double previous = INFINITY;
    for (std::int64_t n : {4, 8, 16, 32, 64}) {
      const std::int64_t k = n * q / 4;
      const double gap = std::abs(RuleOfSuccession(SampleCount(k, n)) -
                                  static_cast<double>(k) / n);
      if (gap > previous) ++ros_failures;
      previous = gap;
    }
  }
  // Beta posterior mean against midpoint integration in t, p = sin^2(t).
  double worst_beta = 0.0;
  const long double half_pi = std::acos(-1.0L) / 2;
  for (double a : {0.5, 1.0, 2.0, 5.0}) {
    for (double b : {0.5, 1.0, 2.0, 5.0}) {
      for (auto [k, n] : {std::pair{0, 0}, {1, 4}, {8, 16}, {16, 16}, {3, 30}, {50, 50}}) {
        const long double alpha = k + a;
        const long double beta = n - k + b;
        long double num = 0.0L;
        long double den = 0.0L;
        constexpr int kSteps = 20000;
        for (int i = 0; i < kSteps; ++i) {
          const long double t = (i + 0.5L) * half_pi / kSteps;
          const long double s = std::sin(t);
          const long double w =
              std::pow(s, 2 * alpha - 1) * std::pow(std::cos(t), 2 * beta - 1);
          num += s * s * w;
          den += w;
        }
        worst_beta = std::max(
            worst_beta,
            std::abs(BetaPosteriorMean(BetaPrior(a, b), SampleCount(k, n)) -
                     static_cast<double>(num / den)));
      }
    }
  }
  // CART against the recursive reference.
  Rng rng(99);
  int tree_failures = 0;
  constexpr int kTrees = 300;
  for (int trial = 0; trial < kTrees; ++trial) {
    const int n = 2 + static_cast<int>(rng.Below(29));
    const int features = 1 + static_cast<int>(rng.Below(4));
    std::vector<std::vector<std::uint8_t>> x(n, std::vector<std::uint8_t>(features));
    std::vector<std::uint8_t> y(n);
    std::vector<std::string> names(features, "f");
    for (int f = 0; f < features; ++f) names[f] += std::to_string(f);
    for (int r = 0; r < n; ++r) {
      for (auto& v : x[r]) v = rng.Below(2);
      y[r] = rng.Below(2);
    }
    const auto d = EncodedDataset::FromRows(names, x, y);
    std::vector<int> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    if (!SameTree(TrainTree(d, TreeParams{}), 0, RefTrain(x, y, rows, features))) {
      ++tree_failures;
    }
  }
  // Pearson against the covariance definition in long double.
  double worst_pearson = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng.Below(100);
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.Uniform();
      y[i] = 0.7 * x[i] + rng.Uniform();
    }
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= n;
    my /= n;
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    const double ref = static_cast<double>(sxy / std::sqrt(sxx * syy));
    worst_pearson = std::max(worst_pearson, std::abs(*PearsonCorrelation(x, y) - ref));
  }
  return {ros_failures == 0 && worst_beta <= 1e-6 && tree_failures == 0 &&
              worst_pearson <= 1e-12,
          "RoS regression failures " + std::to_string(ros_failures) +
              "; beta grid max error " + FormatDouble(worst_beta) +
              "; CART mismatches " + std::to_string(tree_failures) + "/" +
              std::to_string(kTrees) + "; Pearson max error " +
              FormatDouble(worst_pearson)};
}

// ---------------------------------------------------------------------------

struct Reference {
  std::string dataset;
  std::map<std::string, double> cells;
};

const std::vector<Reference>& ReferenceCorrelations() {
  static const std::vector<Reference> values{
      {"adult",
       {{kMajTr, 0.82}, {kMajEsTr, 0.82}, {kMinTr, 0.49}, {kMinEsTr, 0.56},
        {kDiffEsTr, 0.61}, {kFullTr, 0.50}, {kFullEsTr, 0.56}}},
      {"compas",
       {{kMajTr, 0.95}, {kMajEsTr, 0.95}, {kMinTr, 0.86}, {kMinEsTr, 0.86},
        {kDiffEsTr, 0.47}, {kFullTr, 0.86}, {kFullEsTr, 0.85}}}};
  return values;
}

EncodedDataset LoadBundled(const std::string& name) {
  const auto schema = SchemaConfig::FromFile(kSchemas + "/" + name + ".schema.json");
  const std::string file =
      name == "adult" ? "adult.data" : "compas-scores-two-years.csv";
  return LoadCsv(kData + "/" + file, schema);
}

struct AuditRuns {
  std::map<std::string, EncodedDataset> data;
  std::map<std::string, AuditResult> results;
  double seconds = 0.0;
};

AuditRuns& Audits() {
  static AuditRuns runs = [] {
    AuditRuns r;
    const auto start = std::chrono::steady_clock::now();
    for (const char* name : {"adult", "compas"}) {
      r.data.emplace(name, LoadBundled(name));
      AuditConfig config;
      config.threads = std::max(1u, std::thread::hardware_concurrency());
      r.results.emplace(name, RunAudit(r.data.at(name), config));
    }
    r.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
    return r;
  }();
  return runs;
}

Outcome AdultDirection() {
  const auto& a = Audits().results.at("adult");
  if (!a.group_measurement) return {false, "no group measurement"};
  const auto& male = a.group_measurement->majority;
  const auto& female = a.group_measurement->minority;
  int positive = 0;
  std::string cells;
  for (const auto& name : HeadlineCells()) {
    const auto& v = a.correlations.Cell(name).value;
    if (v && *v > 0) ++positive;
    cells += " " + FormatCorrelation(v);
  }
  const bool pass = male.bias < 0 && female.bias < 0 &&
                    std::abs(female.bias) > std::abs(male.bias) && positive == 7;
  return {pass, "b(D) male " + Fmt(male.bias, 4) + ", female " +
                    Fmt(female.bias, 4) + "; cells" + cells + " (" +
                    a.config.protocol.Name() + ")"};
}

Outcome QuantitativeCorrelations() {
  auto& runs = Audits();
  std::ostringstream detail;
  std::vector<std::pair<std::string, std::string>> outside;
  int inside = 0;
  for (const auto& pub : ReferenceCorrelations()) {
    const auto& result = runs.results.at(pub.dataset);
    for (const auto& name : HeadlineCells()) {
      const auto& v = result.correlations.Cell(name).value;
      const double target = pub.cells.at(name);
      if (v && std::abs(*v - target) <= 0.20) {
        ++inside;
      } else {
        outside.push_back({pub.dataset, name});
      }
    }
  }
  detail << inside << "/14 cells within +/-0.20; both audits "
         << Fmt(runs.seconds, 2) << " s (< 600 s)";
  for (const auto& [dataset, cell] : outside) {
    const double target = [&] {
      for (const auto& p : ReferenceCorrelations()) {
        if (p.dataset == dataset) return p.cells.at(cell);
      }
      return 0.0;
    }();
    detail << "\n      out of band: " << dataset << " " << cell << " = "
           << FormatCorrelation(runs.results.at(dataset).correlations.Cell(cell).value)
           << " vs " << Fmt(target, 2) << "; variant sweep:";
    for (auto kind : {ProtocolKind::kTrainOnAll, ProtocolKind::kCrossValidation}) {
      for (bool per_subset : {false, true}) {
        AuditConfig config;
        config.protocol.kind = kind;
        config.protocol.per_subset = per_subset;
        config.threads = std::max(1u, std::thread::hardware_concurrency());
        const auto r = RunAudit(runs.data.at(dataset), config);
        const auto& v = r.correlations.Cell(cell).value;
        const bool ok = v && std::abs(*v - target) <= 0.20;
        detail << "\n        " << config.protocol.Name() << ": "
               << FormatCorrelation(v) << (ok ? " (in band)" : " (out)");
      }
    }
  }
  return {outside.empty() && runs.seconds < 600.0, detail.str()};
}

Outcome SubsetCensus() {
  const auto& runs = Audits();
  std::size_t splits = 0;
  std::size_t per_feature = 0;
  std::ostringstream detail;
  for (const char* name : {"adult", "compas"}) {
    const auto& r = runs.results.at(name);
    splits += r.enumeration.splits.size();
    std::size_t duplicates = 0;
    for (const auto& rej : r.enumeration.rejected) {
      if (rej.reason.starts_with("duplicate of")) ++duplicates;
    }
    per_feature += r.enumeration.splits.size() + duplicates;
    detail << name << " " << r.enumeration.splits.size() << " splits; ";
  }
  detail << "combined: " << 2 * splits << " subsets (split sides), " << splits
         << " distinct splits, " << per_feature
         << " one-hot features passing the filter";
  return {2 * splits > 70, detail.str()};
}

Outcome PvcCensusAndFit() {
  const auto& census = Audits().results.at("adult").census;
  double worst = 0.0;
  std::string fits;
  for (double x : {1.2, 1.5, 2.0, 2.5, 3.0}) {
    const LeafSizeDistribution d(x, 1000);
    Rng rng(static_cast<std::uint64_t>(x * 1000));
    std::vector<std::int64_t> sizes(10000);
    for (auto& s : sizes) s = d.Draw(rng);
    const double fit = FitPowerLaw(sizes).exponent;
    worst = std::max(worst, std::abs(fit - x));
    fits += " " + Fmt(fit, 3);
  }
  return {census.row_share_below_100 > 0.5 && worst <= 0.15,
          "adult rows in PVCs < 100: " + FormatPercent(census.row_share_below_100) +
              " of " + std::to_string(census.sizes.size()) +
              " PVCs; fitted exponents for 1.2..3.0:" + fits +
              " (max error " + Fmt(worst, 3) + ")"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "small-sample generating-probability table", SmallSampleTable},
      {2, "equal-rate single-PVC worked example", EqualRateScenario},
      {3, "single-PVC rerun at adult group rates", AdultRatesScenario},
      {4, "threshold model", ThresholdModel},
      {5, "analytic invariant suite", AnalyticInvariants},
      {6, "adult audit directional claims", AdultDirection},
      {7, "adult/COMPAS correlations within +/-0.20", QuantitativeCorrelations},
      {8, "subset census", SubsetCensus},
      {9, "PVC census and power-law fit", PvcCensusAndFit},
  };
  int unexpected = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    const bool expected_fail = kExpectedFailures.contains(c.id);
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name
              << " (" << Fmt(secs, 2) << " s)";
    if (!o.pass && expected_fail) std::cout << " [known failure]";
    if (o.pass && expected_fail) std::cout << " [listed as known failure]";
    std::cout << "\n      " << o.detail << '\n';
    if (o.pass == expected_fail) ++unexpected;
  }
  std::cout << (unexpected == 0 ? "acceptance: all results as expected\n"
                                : "acceptance: unexpected results\n");
  return unexpected == 0 ? 0 : 1;
}
