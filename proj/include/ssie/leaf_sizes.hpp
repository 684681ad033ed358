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

// Distributions over leaf / predictor-combination sizes: empirical
// histograms, normalized power laws, exponential spread, and a discrete
// maximum-likelihood power-law fit.

#pragma once

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssie/error.hpp"
#include "ssie/random.hpp"

namespace ssie {

struct SizeWeight {
  std::int64_t size = 0;
  double weight = 0.0;

  friend bool operator==(const SizeWeight&, const SizeWeight&) = default;
};

// Pairs (size i, share p_i) with positive unique sizes in ascending order and
// shares summing to 1. For an empirical histogram p_i is the proportion of
// the population that sits in a leaf of size i.
class LeafSizeHistogram {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit LeafSizeHistogram(std::vector<SizeWeight> entries)
      : entries_(std::move(entries)) {
    if (entries_.empty()) throw UsageError("leaf-size histogram is empty");
    std::sort(entries_.begin(), entries_.end(),
              [](const SizeWeight& l, const SizeWeight& r) {
                return l.size < r.size;
              });
    double total = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].size <= 0) {
        throw UsageError("leaf sizes must be positive");
      }
      if (i > 0 && entries_[i].size == entries_[i - 1].size) {
        throw UsageError("leaf sizes must be unique, duplicate " +
                         std::to_string(entries_[i].size));
      }
      if (!(entries_[i].weight >= 0.0 && entries_[i].weight <= 1.0)) {
        throw UsageError("leaf-size proportions must lie in [0, 1]");
      }
      total += entries_[i].weight;
    }
    if (std::abs(total - 1.0) > kSumTolerance) {
      throw UsageError("leaf-size proportions sum to " +
                       std::to_string(total) + ", expected 1");
    }
  }

  // Population mass per size: `rows_at_size[i]` members live in leaves of
  // size i. Proportions are mass / total mass.
  static LeafSizeHistogram FromMass(
      const std::map<std::int64_t, double>& rows_at_size) {
    double total = 0.0;
    for (const auto& [size, mass] : rows_at_size) total += mass;
    if (!(total > 0.0)) throw UsageError("leaf-size histogram has no mass");
    std::vector<SizeWeight> entries;
    for (const auto& [size, mass] : rows_at_size) {
      if (mass > 0.0) entries.push_back({size, mass / total});
    }
    return LeafSizeHistogram(std::move(entries));
  }

  // One entry per leaf; a leaf of size s holds s members.
  static LeafSizeHistogram FromLeafSizes(std::span<const std::int64_t> sizes) {
    std::map<std::int64_t, double> mass;
    for (std::int64_t s : sizes) {
      if (s <= 0) throw UsageError("leaf sizes must be positive");
      mass[s] += static_cast<double>(s);
    }
    return FromMass(mass);
  }

  std::span<const SizeWeight> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::int64_t max_size() const { return entries_.back().size; }

  friend bool operator==(const LeafSizeHistogram&,
                         const LeafSizeHistogram&) = default;

 private:
  std::vector<SizeWeight> entries_;
};

// Normalized power law P(F) proportional to 1/F^X over F = 1..N, optionally
// restricted to odd F.
class LeafSizeDistribution {
 public:
  enum class Support { kAll, kOddOnly };

  LeafSizeDistribution(double exponent, std::int64_t max_size,
                       Support support = Support::kAll)
      : exponent_(exponent), max_size_(max_size),
        weights_(Build(exponent, max_size, support)) {
    cumulative_.reserve(weights_.size());
    double acc = 0.0;
    for (const auto& e : weights_.entries()) {
      acc += e.weight;
      cumulative_.push_back(acc);
    }
  }

  double exponent() const { return exponent_; }
  std::int64_t max_size() const { return max_size_; }
  const LeafSizeHistogram& weights() const { return weights_; }

  // Inverse-CDF draw of one leaf size.
  std::int64_t Draw(Rng& rng) const {
    const double u = rng.Uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return weights_.entries()[static_cast<std::size_t>(
                                  it - cumulative_.begin())]
        .size;
  }

 private:
  static LeafSizeHistogram Build(double exponent, std::int64_t max_size,
                                 Support support) {
    if (!(exponent > 0.0) || !std::isfinite(exponent)) {
      throw UsageError("power-law exponent must be positive");
    }
    if (max_size < 1) throw UsageError("power-law max size must be >= 1");
    std::vector<SizeWeight> entries;
    double total = 0.0;
    for (std::int64_t f = 1; f <= max_size; ++f) {
      if (support == Support::kOddOnly && f % 2 == 0) continue;
      const double w = std::pow(static_cast<double>(f), -exponent);
      entries.push_back({f, w});
      total += w;
    }
    for (auto& e : entries) e.weight /= total;
    return LeafSizeHistogram(std::move(entries));
  }

  double exponent_;
  std::int64_t max_size_;
  LeafSizeHistogram weights_;
  std::vector<double> cumulative_;
};

// Sum over sizes of p_i / i. High when the population sits in small leaves;
// 1 exactly when every leaf is a singleton.
inline double ExponentialSpread(const LeafSizeHistogram& h) {
  double es = 0.0;
  for (const auto& e : h.entries()) {
    es += e.weight / static_cast<double>(e.size);
  }
  return es;
}

// Sum over observed sizes of (p_i + Tr) / i, the target rate added inside
// every term.
inline double ExponentialSpreadWithTarget(const LeafSizeHistogram& h,
                                          double target_rate) {
  if (!(target_rate >= 0.0 && target_rate <= 1.0)) {
    throw UsageError("target rate must lie in [0, 1]");
  }
  double es = 0.0;
  for (const auto& e : h.entries()) {
    es += (e.weight + target_rate) / static_cast<double>(e.size);
  }
  return es;
}

// ES + Tr, the additive reading.
inline double ExponentialSpreadPlusTarget(const LeafSizeHistogram& h,
                                          double target_rate) {
  if (!(target_rate >= 0.0 && target_rate <= 1.0)) {
    throw UsageError("target rate must lie in [0, 1]");
  }
  return ExponentialSpread(h) + target_rate;
}

struct PowerLawFit {
  double exponent = 0.0;
  double log_likelihood = 0.0;
  std::int64_t max_size = 0;
  std::size_t samples = 0;
};

// Discrete maximum-likelihood power-law exponent with minimum size 1 and the
// normalizer truncated at the largest observed size:
//   l(X) = -X * sum(ln s) - n * ln(sum_{F=1}^{max} F^-X).
inline PowerLawFit FitPowerLaw(std::span<const std::int64_t> sizes) {
  if (sizes.empty()) throw NumericalError("power-law fit needs samples");
  double log_sum = 0.0;
  std::int64_t max_size = 0;
  std::int64_t min_size = sizes.front();
  for (std::int64_t s : sizes) {
    if (s < 1) throw UsageError("power-law fit requires positive sizes");
    log_sum += std::log(static_cast<double>(s));
    max_size = std::max(max_size, s);
    min_size = std::min(min_size, s);
  }
  if (min_size == max_size) {
    throw NumericalError(
        "degenerate power-law fit: all sizes equal " +
        std::to_string(max_size));
  }
  std::vector<double> log_f(static_cast<std::size_t>(max_size));
  for (std::int64_t f = 1; f <= max_size; ++f) {
    log_f[static_cast<std::size_t>(f - 1)] = std::log(static_cast<double>(f));
  }
  const auto n = static_cast<double>(sizes.size());
  auto negative_ll = [&](double x) {
    double z = 0.0;
    for (double lf : log_f) z += std::exp(-x * lf);
    return x * log_sum + n * std::log(z);
  };
  constexpr double kLower = 1e-3;
  constexpr double kUpper = 20.0;
  const auto [x, value] = boost::math::tools::brent_find_minima(
      negative_ll, kLower, kUpper, std::numeric_limits<double>::digits / 2);
  return PowerLawFit{x, -value, max_size, sizes.size()};
}

}  // namespace ssie
