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

// Closed-form models of how small-sample inference and a 0.5 decision
// threshold bias a group's predicted target rate.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssie/error.hpp"
#include "ssie/inference.hpp"
#include "ssie/leaf_sizes.hpp"

namespace ssie {

// Rounds half away from zero to `digits` decimals, as a printed table would.
inline double RoundDecimals(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(value * scale) / scale;
}

// ---------------------------------------------------------------------------
// Single predictor-combination scenario.
//
// A sample of `total` rows splits into a majority (share 1 - R) and a
// minority (share R). Within each group a perfect predictor X co-occurs with
// the target at rate S, so the group holds n = round(group size * S) rows with
// X = 1, all of them targets. The posterior mean for P(T=1 | X=1, G) is then
// computed from (K = n, N = n).

struct PvcScenario {
  std::int64_t total = 100;
  double minority_fraction = 0.2;  // R
  double majority_rate = 0.2;      // S1
  double minority_rate = 0.2;      // S2
  BetaPrior prior = BetaPrior::Uniform();

  void Validate() const {
    if (total < 1) throw UsageError("scenario requires N >= 1");
    if (!(minority_fraction > 0.0 && minority_fraction < 1.0)) {
      throw UsageError("scenario requires 0 < R < 1");
    }
    for (double s : {majority_rate, minority_rate}) {
      if (!(s >= 0.0 && s <= 1.0)) {
        throw UsageError("scenario rates must lie in [0, 1]");
      }
    }
  }
};

// The same cells as PvcGroupResult, computed the way a table printed to two
// decimals is: conditionals rounded first, joint cells rounded, falls taken
// between rounded cells.
struct RoundedGroupCells {
  double conditional = 0.0;
  double predicted_within_group = 0.0;
  double predicted_target1 = 0.0;
  double predicted_target0 = 0.0;
  double actual_target1 = 0.0;
  std::optional<double> relative_fall;
};

struct PvcGroupResult {
  std::string label;
  double group_fraction = 0.0;
  double group_size = 0.0;
  std::int64_t pvc_count = 0;
  // The group had no X = 1 rows; conditional is the prior mean.
  bool degenerate = false;
  double conditional = 0.0;  // P(T=1 | X=1, G)
  std::optional<Fraction> conditional_exact;
  double actual_within_group = 0.0;     // S
  double predicted_within_group = 0.0;  // conditional * S
  double actual_target1 = 0.0;          // S * group fraction
  double predicted_target1 = 0.0;       // conditional * S * group fraction
  double predicted_target0 = 0.0;       // group fraction - predicted_target1
  // (S - conditional * S) / S; absent when S = 0.
  std::optional<double> relative_fall;
  RoundedGroupCells rounded;
};

struct PvcScenarioResult {
  PvcGroupResult majority;
  PvcGroupResult minority;
};

namespace internal {

inline bool IsIntegral(double v) { return std::floor(v) == v; }

inline PvcGroupResult EvaluateGroup(const std::string& label,
                                    double fraction, double rate,
                                    const PvcScenario& s) {
  PvcGroupResult g;
  g.label = label;
  g.group_fraction = fraction;
  g.group_size = static_cast<double>(s.total) * fraction;
  g.pvc_count = static_cast<std::int64_t>(std::llround(g.group_size * rate));
  g.degenerate = g.pvc_count == 0;
  const SampleCount counts(g.pvc_count, g.pvc_count);
  g.conditional = BetaPosteriorMean(s.prior, counts);
  if (IsIntegral(s.prior.a()) && IsIntegral(s.prior.b())) {
    g.conditional_exact = BetaPosteriorMeanExact(
        counts, static_cast<std::int64_t>(s.prior.a()),
        static_cast<std::int64_t>(s.prior.b()));
  }
  g.actual_within_group = rate;
  g.predicted_within_group = g.conditional * rate;
  g.actual_target1 = rate * fraction;
  g.predicted_target1 = g.predicted_within_group * fraction;
  g.predicted_target0 = fraction - g.predicted_target1;
  if (rate > 0.0) {
    g.relative_fall =
        UnderpredictionMetric({label, rate, g.predicted_within_group});
  }

  RoundedGroupCells& r = g.rounded;
  r.conditional = RoundDecimals(g.conditional, 2);
  r.predicted_within_group = r.conditional * rate;
  const double joint = r.predicted_within_group * fraction;
  r.predicted_target1 = RoundDecimals(joint, 2);
  r.predicted_target0 = RoundDecimals(fraction - joint, 2);
  r.actual_target1 = RoundDecimals(g.actual_target1, 2);
  if (r.actual_target1 > 0.0) {
    r.relative_fall =
        (r.actual_target1 - r.predicted_target1) / r.actual_target1;
  }
  return g;
}

}  // namespace internal

inline PvcScenarioResult SinglePvcScenario(const PvcScenario& s) {
  s.Validate();
  return PvcScenarioResult{
      internal::EvaluateGroup("majority", 1.0 - s.minority_fraction,
                              s.majority_rate, s),
      internal::EvaluateGroup("minority", s.minority_fraction,
                              s.minority_rate, s)};
}

// ---------------------------------------------------------------------------
// Leaf-level inference and its aggregation over a power law of leaf sizes.

// (S*F + a) / (F + 2a): the posterior mean for a leaf of F rows, S of them
// targets, under a symmetric Beta(a, a) prior. F may be fractional.
inline double LeafInferredProbability(double quality, double leaf_size,
                                      double a = 1.0) {
  if (!(quality >= 0.0 && quality <= 1.0)) {
    throw UsageError("leaf quality S must lie in [0, 1]");
  }
  if (!(leaf_size >= 0.0)) throw UsageError("leaf size must be >= 0");
  if (!(a > 0.0)) throw UsageError("prior pseudo-count must be positive");
  return (quality * leaf_size + a) / (leaf_size + 2.0 * a);
}

// Ratio of the minority's to the majority's prediction deviation for a leaf of
// F rows split R : 1 - R between the groups (uniform prior).
inline double BiasRatio(double leaf_size, double minority_fraction,
                        double majority_rate, double minority_rate) {
  const double minority_rows = leaf_size * minority_fraction;
  const double majority_rows = leaf_size * (1.0 - minority_fraction);
  if (!(minority_rows >= 0.0) || !(majority_rows > 0.0)) {
    throw UsageError("bias ratio requires F*R >= 0 and F*(1-R) > 0");
  }
  const double numerator =
      (minority_rate * minority_rows + 1.0) / (minority_rows + 2.0) -
      minority_rate;
  const double denominator =
      (majority_rate * majority_rows + 1.0) / (majority_rows + 2.0) -
      majority_rate;
  if (denominator == 0.0) {
    throw NumericalError(
        "singular bias ratio: majority deviation vanishes (S1 = " +
        std::to_string(majority_rate) + ")");
  }
  return numerator / denominator;
}

// Discrete sum of b(F) * P(F) over the normalized distribution.
inline double AggregateBias(const LeafSizeDistribution& d,
                            double minority_fraction, double majority_rate,
                            double minority_rate) {
  double total = 0.0;
  for (const auto& e : d.weights().entries()) {
    total += e.weight * BiasRatio(static_cast<double>(e.size),
                                  minority_fraction, majority_rate,
                                  minority_rate);
  }
  return total;
}

// Rows of a leaf of size F that belong to a group holding `group_fraction` of
// the population: nearest integer, never negative.
inline std::int64_t GroupLeafRows(std::int64_t leaf_size,
                                  double group_fraction) {
  const auto rows = static_cast<std::int64_t>(
      std::llround(static_cast<double>(leaf_size) * group_fraction));
  return rows < 0 ? 0 : rows;
}

// Expected predicted target rate for a group whose leaves all have quality S:
// sum over F of P(F) * posterior mean on the group's share of the leaf. A
// group with no rows in a leaf gets the prior mean.
inline double ExpectedGroupPrediction(const LeafSizeDistribution& d,
                                      double quality, double group_fraction,
                                      const BetaPrior& prior) {
  if (!(group_fraction > 0.0 && group_fraction <= 1.0)) {
    throw UsageError("group fraction must lie in (0, 1]");
  }
  if (!(quality >= 0.0 && quality <= 1.0)) {
    throw UsageError("leaf quality S must lie in [0, 1]");
  }
  double predicted = 0.0;
  for (const auto& e : d.weights().entries()) {
    const auto m = static_cast<double>(GroupLeafRows(e.size, group_fraction));
    predicted += e.weight * (quality * m + prior.a()) /
                 (m + prior.a() + prior.b());
  }
  return predicted;
}

struct CurvePoint {
  double x = 0.0;
  double value = 0.0;
};

inline const std::vector<double>& DefaultExponentGrid() {
  static const std::vector<double> grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  return grid;
}

inline const std::vector<double>& DefaultQualityGrid() {
  static const std::vector<double> grid{0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  return grid;
}

// Underprediction (S - predicted) / S as the power-law exponent varies.
inline std::vector<CurvePoint> UnderpredictionByExponent(
    std::span<const double> exponents, std::int64_t max_size, double quality,
    double group_fraction, const BetaPrior& prior) {
  std::vector<CurvePoint> curve;
  curve.reserve(exponents.size());
  for (double x : exponents) {
    const LeafSizeDistribution d(x, max_size);
    const double predicted =
        ExpectedGroupPrediction(d, quality, group_fraction, prior);
    curve.push_back(
        {x, UnderpredictionMetric({"group", quality, predicted})});
  }
  return curve;
}

// Underprediction as the leaf quality S varies, at a fixed distribution.
inline std::vector<CurvePoint> UnderpredictionByQuality(
    std::span<const double> qualities, const LeafSizeDistribution& d,
    double group_fraction, const BetaPrior& prior) {
  std::vector<CurvePoint> curve;
  curve.reserve(qualities.size());
  for (double s : qualities) {
    const double predicted = ExpectedGroupPrediction(d, s, group_fraction, prior);
    curve.push_back({s, UnderpredictionMetric({"group", s, predicted})});
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Decision-threshold model.

// P(X > F/2) for X ~ Binomial(F, p): the chance a leaf of F rows holds
// strictly more than half targets and so predicts the target. Exact ties at
// F/2 do not predict.
inline double ThresholdPredictedRate(std::int64_t leaf_size, double p) {
  if (leaf_size < 1) throw UsageError("threshold model requires F >= 1");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw UsageError("threshold model requires p in [0, 1]");
  }
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  const std::int64_t first = leaf_size / 2 + 1;
  const double q = 1.0 - p;
  double total = 0.0;
  if (leaf_size <= 60) {
    // Binomial coefficients stay exact enough in double here, and F = 1
    // reduces to exactly p.
    double coefficient = 1.0;  // C(F, first), built up below
    for (std::int64_t k = 1; k <= first; ++k) {
      coefficient = coefficient * static_cast<double>(leaf_size - k + 1) /
                    static_cast<double>(k);
    }
    for (std::int64_t k = first; k <= leaf_size; ++k) {
      total += coefficient * std::pow(p, static_cast<double>(k)) *
               std::pow(q, static_cast<double>(leaf_size - k));
      coefficient = coefficient * static_cast<double>(leaf_size - k) /
                    static_cast<double>(k + 1);
    }
  } else {
    const double n = static_cast<double>(leaf_size);
    const double log_p = std::log(p);
    const double log_q = std::log1p(-p);
    for (std::int64_t k = first; k <= leaf_size; ++k) {
      const double kd = static_cast<double>(k);
      total += std::exp(std::lgamma(n + 1.0) - std::lgamma(kd + 1.0) -
                        std::lgamma(n - kd + 1.0) + kd * log_p +
                        (n - kd) * log_q);
    }
  }
  return total > 1.0 ? 1.0 : total;
}

// Predicted target rate of a group whose leaf sizes follow `sizes`.
inline double ThresholdGroupRate(const LeafSizeHistogram& sizes, double p) {
  double total = 0.0;
  for (const auto& e : sizes.entries()) {
    total += e.weight * ThresholdPredictedRate(e.size, p);
  }
  return total;
}

inline double ThresholdGroupRate(const LeafSizeDistribution& d, double p) {
  return ThresholdGroupRate(d.weights(), p);
}

}  // namespace ssie
