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

#include "ssie/analytic_model.hpp"
#include "ssie/audit.hpp"
#include "ssie/dataset.hpp"
#include "ssie/decision_tree.hpp"
#include "ssie/digest.hpp"
#include "ssie/error.hpp"
#include "ssie/inference.hpp"
#include "ssie/leaf_sizes.hpp"
#include "ssie/parallel.hpp"
#include "ssie/random.hpp"
#include "ssie/report.hpp"
#include "ssie/statistics.hpp"

namespace ssie {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ssie
