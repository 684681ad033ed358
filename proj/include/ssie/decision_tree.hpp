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

// CART classification tree over binary features with Gini impurity.
//
// Defaults follow the common reference configuration: best split, unlimited
// depth, min 2 samples to split, min 1 sample per leaf, and a node is split
// whenever it is impure and some feature separates it, even at zero gain.
// Equal-gain candidates resolve to the lowest feature index; split scores are
// compared exactly in integer arithmetic, so ties are real ties.

#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ssie/dataset.hpp"
#include "ssie/error.hpp"
#include "ssie/leaf_sizes.hpp"

namespace ssie {

struct TreeParams {
  std::optional<int> max_depth;  // unlimited when empty
  std::int64_t min_samples_split = 2;
  std::int64_t min_samples_leaf = 1;
  // Recorded for reproducibility; split selection is deterministic and does
  // not consume randomness.
  std::uint64_t seed = 0;

  void Validate() const {
    if (min_samples_leaf < 1) throw UsageError("min samples per leaf must be >= 1");
    if (min_samples_split < 2) throw UsageError("min samples per split must be >= 2");
    if (max_depth && *max_depth < 0) throw UsageError("max depth must be >= 0");
  }
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  int zero_child = -1;
  int one_child = -1;
  int depth = 0;
  std::int64_t size = 0;
  std::int64_t target_count = 0;

  bool is_leaf() const { return feature < 0; }
  double rate() const {
    return static_cast<double>(target_count) / static_cast<double>(size);
  }
  // Strictly more than half targets.
  int predicted_class() const { return 2 * target_count > size ? 1 : 0; }
};

struct TreePrediction {
  int predicted_class = 0;
  double leaf_rate = 0.0;
  int leaf = -1;
};

// A trained tree; immutable after construction.
class DecisionTree {
 public:
  DecisionTree(std::vector<TreeNode> nodes, std::vector<std::string> names)
      : nodes_(std::move(nodes)), feature_names_(std::move(names)) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }

  template <typename FeatureAt>
  int LeafFor(FeatureAt&& feature_at) const {
    int n = 0;
    while (!nodes_[n].is_leaf()) {
      n = feature_at(static_cast<std::size_t>(nodes_[n].feature)) != 0
              ? nodes_[n].one_child
              : nodes_[n].zero_child;
    }
    return n;
  }

  TreePrediction Predict(std::span<const std::uint8_t> row) const {
    const int leaf = LeafFor([&](std::size_t f) { return row[f]; });
    return {nodes_[leaf].predicted_class(), nodes_[leaf].rate(), leaf};
  }

  TreePrediction Predict(const EncodedDataset& d, std::size_t row) const {
    const int leaf = LeafFor([&](std::size_t f) { return d.value(row, f); });
    return {nodes_[leaf].predicted_class(), nodes_[leaf].rate(), leaf};
  }

  std::vector<int> Leaves() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
    }
    return out;
  }

  int Depth() const {
    int depth = 0;
    for (const auto& n : nodes_) depth = std::max(depth, n.depth);
    return depth;
  }

  void Dump(std::ostream& out) const { DumpNode(out, 0, ""); }

 private:
  void DumpNode(std::ostream& out, int n, const std::string& indent) const {
    const TreeNode& node = nodes_[n];
    out << indent;
    if (node.is_leaf()) {
      out << "leaf size=" << node.size << " targets=" << node.target_count
          << " S=" << node.rate() << " class=" << node.predicted_class()
          << '\n';
      return;
    }
    out << feature_names_[node.feature] << " size=" << node.size
        << " targets=" << node.target_count << " S=" << node.rate() << '\n';
    out << indent << "  [" << feature_names_[node.feature] << "=0]\n";
    DumpNode(out, node.zero_child, indent + "    ");
    out << indent << "  [" << feature_names_[node.feature] << "=1]\n";
    DumpNode(out, node.one_child, indent + "    ");
  }

  std::vector<TreeNode> nodes_;
  std::vector<std::string> feature_names_;
};

namespace internal {

// Score of a two-way split to be maximized: sum over children of
// (pos^2 + neg^2) / n, held as an exact fraction. Maximizing it minimizes
// the size-weighted Gini impurity of the children.
struct SplitScore {
  __int128 numerator = 0;
  __int128 denominator = 1;

  static SplitScore Of(std::int64_t n0, std::int64_t p0, std::int64_t n1,
                       std::int64_t p1) {
    const __int128 s0 = static_cast<__int128>(p0) * p0 +
                        static_cast<__int128>(n0 - p0) * (n0 - p0);
    const __int128 s1 = static_cast<__int128>(p1) * p1 +
                        static_cast<__int128>(n1 - p1) * (n1 - p1);
    return {s0 * n1 + s1 * n0, static_cast<__int128>(n0) * n1};
  }

  bool operator>(const SplitScore& o) const {
    return numerator * o.denominator > o.numerator * denominator;
  }
};

}  // namespace internal

// Gini impurity decrease of splitting (n, p) into the feature = 0 and
// feature = 1 children; used for reporting and tests.
inline double GiniGain(std::int64_t n0, std::int64_t p0, std::int64_t n1,
                       std::int64_t p1) {
  auto gini = [](double n, double p) {
    if (n == 0) return 0.0;
    const double r = p / n;
    return 2.0 * r * (1.0 - r);
  };
  const double n = static_cast<double>(n0 + n1);
  const double parent = gini(n, static_cast<double>(p0 + p1));
  return parent - (static_cast<double>(n0) * gini(n0, p0) +
                   static_cast<double>(n1) * gini(n1, p1)) / n;
}

// Trains on the given rows of `d` (all rows when empty). Features whose
// `allowed` entry is false are never split on.
inline DecisionTree TrainTree(const EncodedDataset& d, const TreeParams& params,
                              std::span<const std::uint32_t> rows = {},
                              const std::vector<bool>& allowed = {}) {
  params.Validate();
  std::vector<std::uint32_t> all;
  if (rows.empty()) {
    all.resize(d.rows());
    std::iota(all.begin(), all.end(), 0u);
    rows = all;
  }
  if (rows.empty()) throw DataError("cannot train a tree on an empty dataset");
  if (!allowed.empty() && allowed.size() != d.features()) {
    throw UsageError("feature mask has wrong size");
  }

  const auto y = d.target();
  std::vector<TreeNode> nodes;
  struct Pending {
    int node;
    std::vector<std::uint32_t> rows;
  };
  auto make_node = [&](std::span<const std::uint32_t> r, int depth) {
    TreeNode node;
    node.depth = depth;
    node.size = static_cast<std::int64_t>(r.size());
    for (auto i : r) node.target_count += y[i];
    nodes.push_back(node);
    return static_cast<int>(nodes.size() - 1);
  };

  std::vector<Pending> stack;
  stack.push_back({make_node(rows, 0),
                   std::vector<std::uint32_t>(rows.begin(), rows.end())});
  const std::size_t features = d.features();
  while (!stack.empty()) {
    Pending cur = std::move(stack.back());
    stack.pop_back();
    const TreeNode node = nodes[cur.node];
    const std::int64_t n = node.size;
    const std::int64_t p = node.target_count;
    if (p == 0 || p == n || n < params.min_samples_split ||
        (params.max_depth && node.depth >= *params.max_depth)) {
      continue;
    }
    int best = -1;
    internal::SplitScore best_score;
    for (std::size_t f = 0; f < features; ++f) {
      if (!allowed.empty() && !allowed[f]) continue;
      const auto col = d.column(f);
      std::int64_t n1 = 0;
      std::int64_t p1 = 0;
      for (auto i : cur.rows) {
        const std::uint8_t v = col[i];
        n1 += v;
        p1 += v & y[i];
      }
      const std::int64_t n0 = n - n1;
      if (n1 < params.min_samples_leaf || n0 < params.min_samples_leaf) {
        continue;
      }
      const auto score = internal::SplitScore::Of(n0, p - p1, n1, p1);
      if (best < 0 || score > best_score) {
        best = static_cast<int>(f);
        best_score = score;
      }
    }
    if (best < 0) continue;

    std::vector<std::uint32_t> zero_rows;
    std::vector<std::uint32_t> one_rows;
    const auto col = d.column(static_cast<std::size_t>(best));
    for (auto i : cur.rows) (col[i] ? one_rows : zero_rows).push_back(i);
    cur.rows.clear();
    cur.rows.shrink_to_fit();
    const int zero = make_node(zero_rows, node.depth + 1);
    const int one = make_node(one_rows, node.depth + 1);
    nodes[cur.node].feature = best;
    nodes[cur.node].zero_child = zero;
    nodes[cur.node].one_child = one;
    // Depth-first, zero branch first.
    stack.push_back({one, std::move(one_rows)});
    stack.push_back({zero, std::move(zero_rows)});
  }
  return DecisionTree(std::move(nodes), d.feature_names());
}

struct LeafEntry {
  int node = -1;
  std::int64_t size = 0;
  std::int64_t target_count = 0;
  double rate = 0.0;
  std::int64_t group_counts[2] = {0, 0};  // members with feature = 0 / 1
};

struct LeafStats {
  std::vector<LeafEntry> leaves;  // leaves reached by at least one row

  std::int64_t TotalSize() const {
    std::int64_t t = 0;
    for (const auto& l : leaves) t += l.size;
    return t;
  }

  // Leaf sizes as seen by one group: a leaf holding m > 0 members of the
  // group counts as a leaf of size m.
  LeafSizeHistogram GroupHistogram(int group) const {
    std::map<std::int64_t, double> mass;
    for (const auto& l : leaves) {
      const std::int64_t m = l.group_counts[group];
      if (m > 0) mass[m] += static_cast<double>(m);
    }
    return LeafSizeHistogram::FromMass(mass);
  }

  LeafSizeHistogram SizeHistogram() const {
    std::map<std::int64_t, double> mass;
    for (const auto& l : leaves) mass[l.size] += static_cast<double>(l.size);
    return LeafSizeHistogram::FromMass(mass);
  }
};

// Routes `rows` (all rows when empty) through the tree and tallies each
// leaf's size, target rate and membership of `group_feature`, when given.
inline LeafStats ComputeLeafStatistics(
    const DecisionTree& tree, const EncodedDataset& d,
    std::optional<std::size_t> group_feature = std::nullopt,
    std::span<const std::uint32_t> rows = {}) {
  std::vector<LeafEntry> by_node(tree.nodes().size());
  auto visit = [&](std::size_t r) {
    const int leaf = tree.LeafFor([&](std::size_t f) { return d.value(r, f); });
    LeafEntry& e = by_node[leaf];
    e.node = leaf;
    ++e.size;
    e.target_count += d.target()[r];
    if (group_feature) ++e.group_counts[d.value(r, *group_feature)];
  };
  if (rows.empty()) {
    for (std::size_t r = 0; r < d.rows(); ++r) visit(r);
  } else {
    for (auto r : rows) visit(r);
  }
  LeafStats stats;
  for (auto& e : by_node) {
    if (e.size == 0) continue;
    e.rate = static_cast<double>(e.target_count) / static_cast<double>(e.size);
    stats.leaves.push_back(e);
  }
  return stats;
}

}  // namespace ssie
