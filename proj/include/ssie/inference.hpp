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

// Estimating a generating probability from a small sample.
//
// Given K successes in N trials, the naive estimate K/N is not the mean of
// the generating probabilities consistent with the sample. Under a Beta(a, b)
// prior the posterior is Beta(a + K, b + N - K) with mean (K + a)/(N + a + b);
// the uniform prior a = b = 1 gives the rule of succession (K + 1)/(N + 2).
// Both estimates regress toward 0.5, more strongly the smaller N is.

#pragma once

#include <boost/rational.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssie/error.hpp"
#include "ssie/random.hpp"

namespace ssie {

using Fraction = boost::rational<std::int64_t>;

inline double ToDouble(const Fraction& f) {
  return static_cast<double>(f.numerator()) /
         static_cast<double>(f.denominator());
}

// K successes out of N trials.
class SampleCount {
 public:
  SampleCount(std::int64_t successes, std::int64_t trials)
      : successes_(successes), trials_(trials) {
    if (successes < 0 || trials < 0 || successes > trials) {
      throw UsageError("SampleCount requires 0 <= K <= N, got K=" +
                       std::to_string(successes) +
                       " N=" + std::to_string(trials));
    }
  }

  std::int64_t successes() const { return successes_; }
  std::int64_t trials() const { return trials_; }

 private:
  std::int64_t successes_;
  std::int64_t trials_;
};

// Beta(a, b) prior pseudo-counts.
class BetaPrior {
 public:
  BetaPrior(double a, double b) : a_(a), b_(b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
      throw UsageError("BetaPrior requires a > 0 and b > 0");
    }
  }
  static BetaPrior Uniform() { return BetaPrior(1.0, 1.0); }

  double a() const { return a_; }
  double b() const { return b_; }
  double Mean() const { return a_ / (a_ + b_); }

 private:
  double a_;
  double b_;
};

inline Fraction SampleProportionExact(const SampleCount& s) {
  if (s.trials() == 0) {
    throw NumericalError("sample proportion undefined for N = 0");
  }
  return Fraction(s.successes(), s.trials());
}

inline double SampleProportion(const SampleCount& s) {
  return ToDouble(SampleProportionExact(s));
}

inline Fraction RuleOfSuccessionExact(const SampleCount& s) {
  return Fraction(s.successes() + 1, s.trials() + 2);
}

inline double RuleOfSuccession(const SampleCount& s) {
  return ToDouble(RuleOfSuccessionExact(s));
}

// Posterior mean with integer pseudo-counts, kept exact.
inline Fraction BetaPosteriorMeanExact(const SampleCount& s, std::int64_t a,
                                       std::int64_t b) {
  if (a <= 0 || b <= 0) {
    throw UsageError("integer Beta pseudo-counts must be positive");
  }
  return Fraction(s.successes() + a, s.trials() + a + b);
}

inline double BetaPosteriorMean(const BetaPrior& prior, const SampleCount& s) {
  return (static_cast<double>(s.successes()) + prior.a()) /
         (static_cast<double>(s.trials()) + prior.a() + prior.b());
}

struct GeneratingProbabilityRow {
  std::int64_t successes = 0;
  double sample_proportion = 0.0;
  // Absent when no simulated sample landed on this K.
  std::optional<double> mean_generating_probability;
  std::int64_t hits = 0;
};

struct GeneratingProbabilityTable {
  std::int64_t trials = 0;
  std::int64_t iterations = 0;
  std::uint64_t seed = 0;
  std::vector<GeneratingProbabilityRow> rows;  // one per K in 0..N
};

// Monte Carlo estimate of E[p | K] under a uniform prior on p.
//
// Each iteration draws p ~ U[0,1), then N values q ~ U[0,1) and counts
// q < p as a success; p is appended to the bucket for the observed K.
// Iterations are split into `shards` contiguous blocks, shard i drawing from
// Rng::ForStream(seed, i); results depend on (seed, shards) but not on how
// shards are scheduled.
inline GeneratingProbabilityTable SimulateGeneratingProbabilities(
    std::int64_t trials, std::int64_t iterations, std::uint64_t seed,
    std::int64_t shards = 1) {
  if (trials < 1) throw UsageError("simulation requires N >= 1");
  if (iterations < 1) throw UsageError("simulation requires iterations >= 1");
  if (shards < 1) throw UsageError("simulation requires shards >= 1");

  const auto buckets = static_cast<std::size_t>(trials) + 1;
  std::vector<double> sums(buckets, 0.0);
  std::vector<std::int64_t> hits(buckets, 0);

  const std::int64_t per_shard = iterations / shards;
  const std::int64_t remainder = iterations % shards;
  for (std::int64_t shard = 0; shard < shards; ++shard) {
    Rng rng = shards == 1 ? Rng(seed)
                          : Rng::ForStream(seed, static_cast<std::uint64_t>(shard));
    const std::int64_t count = per_shard + (shard < remainder ? 1 : 0);
    for (std::int64_t it = 0; it < count; ++it) {
      const double p = rng.Uniform();
      std::int64_t k = 0;
      for (std::int64_t i = 0; i < trials; ++i) {
        if (rng.Uniform() < p) ++k;
      }
      sums[static_cast<std::size_t>(k)] += p;
      ++hits[static_cast<std::size_t>(k)];
    }
  }

  GeneratingProbabilityTable table;
  table.trials = trials;
  table.iterations = iterations;
  table.seed = seed;
  table.rows.reserve(buckets);
  for (std::size_t k = 0; k < buckets; ++k) {
    GeneratingProbabilityRow row;
    row.successes = static_cast<std::int64_t>(k);
    row.sample_proportion =
        static_cast<double>(k) / static_cast<double>(trials);
    row.hits = hits[k];
    if (hits[k] > 0) {
      row.mean_generating_probability =
          sums[k] / static_cast<double>(hits[k]);
    }
    table.rows.push_back(row);
  }
  return table;
}

// Observed and model-predicted target rate for one group.
struct GroupRates {
  std::string label;
  double actual = 0.0;
  double predicted = 0.0;
};

// (actual - predicted) / actual; positive means the group is underpredicted.
inline double UnderpredictionMetric(const GroupRates& g) {
  if (!(g.actual <= 1.0) || !(g.predicted >= 0.0 && g.predicted <= 1.0)) {
    throw UsageError("group rates must lie in [0, 1]");
  }
  if (!(g.actual > 0.0)) {
    throw NumericalError("underprediction metric undefined for group '" +
                         g.label + "' with zero actual target rate");
  }
  return (g.actual - g.predicted) / g.actual;
}

}  // namespace ssie
