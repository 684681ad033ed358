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

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>

#include "ssie/error.hpp"

namespace ssie {

// Pearson product-moment correlation. Empty when either input has zero
// variance or fewer than `min_points` pairs.
inline std::optional<double> PearsonCorrelation(std::span<const double> x,
                                                std::span<const double> y,
                                                std::size_t min_points = 2) {
  if (x.size() != y.size()) {
    throw UsageError("correlation inputs differ in length");
  }
  const std::size_t n = x.size();
  if (n < min_points || n < 2) return std::nullopt;
  auto constant = [](std::span<const double> v) {
    for (double e : v) {
      if (e != v.front()) return false;
    }
    return true;
  };
  if (constant(x) || constant(y)) return std::nullopt;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  const double r = sxy / std::sqrt(sxx * syy);
  return std::fmax(-1.0, std::fmin(1.0, r));
}

}  // namespace ssie
