// src/clustering.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "sasv/clustering.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include "sasv/error.hpp"

namespace sasv {

std::vector<int> agglomerative_cluster(const Eigen::MatrixXd& points, int k) {
  const int n = static_cast<int>(points.rows());
  detail::require(k >= 1, "agglomerative_cluster: k must be >= 1");
  detail::require(k <= n, "agglomerative_cluster: k exceeds point count");

  Eigen::VectorXd norms = points.rowwise().norm();
  for (int i = 0; i < n; ++i)
    detail::require(norms(i) > 0.0,
                    "agglomerative_cluster: zero-norm point " +
                        std::to_string(i));

  // pairwise cosine distances
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double c = points.row(i).dot(points.row(j)) / (norms(i) * norms(j));
      dist(i, j) = dist(j, i) = 1.0 - std::clamp(c, -1.0, 1.0);
    }
  }

  // Average linkage on the original pairwise distances (UPGMA). pair_sum
  // carries the sum of cross-pair distances per cluster pair, so each merge
  // updates in O(n). Scanning i < j in index order makes equal-distance
  // merges resolve to the lexicographically smallest (i, j); the merged
  // cluster keeps the smaller index.
  std::vector<bool> alive(static_cast<size_t>(n), true);
  std::vector<int> size(static_cast<size_t>(n), 1);
  std::vector<int> owner(static_cast<size_t>(n));
  std::iota(owner.begin(), owner.end(), 0);
  Eigen::MatrixXd pair_sum = dist;

  for (int remaining = n; remaining > k; --remaining) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (int i = 0; i < n; ++i) {
      if (!alive[static_cast<size_t>(i)]) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!alive[static_cast<size_t>(j)]) continue;
        const double d = pair_sum(i, j) /
                         (static_cast<double>(size[static_cast<size_t>(i)]) *
                          static_cast<double>(size[static_cast<size_t>(j)]));
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    for (int c = 0; c < n; ++c) {
      if (!alive[static_cast<size_t>(c)] || c == bi || c == bj) continue;
      pair_sum(bi, c) += pair_sum(bj, c);
      pair_sum(c, bi) = pair_sum(bi, c);
    }
    size[static_cast<size_t>(bi)] += size[static_cast<size_t>(bj)];
    alive[static_cast<size_t>(bj)] = false;
    for (int p = 0; p < n; ++p)
      if (owner[static_cast<size_t>(p)] == bj)
        owner[static_cast<size_t>(p)] = bi;
  }

  // relabel clusters 0..k-1 in order of smallest member index
  std::map<int, int> relabel;
  std::vector<int> out(static_cast<size_t>(n));
  int next = 0;
  for (int p = 0; p < n; ++p) {
    const int o = owner[static_cast<size_t>(p)];
    auto it = relabel.find(o);
    if (it == relabel.end()) it = relabel.emplace(o, next++).first;
    out[static_cast<size_t>(p)] = it->second;
  }
  return out;
}

double cluster_purity(const std::vector<int>& assignments,
                      const std::vector<int>& labels) {
  detail::require(assignments.size() == labels.size() && !assignments.empty(),
                  "cluster_purity: size mismatch");
  std::map<int, std::map<int, int>> counts;
  for (size_t i = 0; i < assignments.size(); ++i)
    ++counts[assignments[i]][labels[i]];
  long agree = 0;
  for (const auto& [cluster, label_counts] : counts) {
    int best = 0;
    for (const auto& [label, c] : label_counts) best = std::max(best, c);
    agree += best;
  }
  return static_cast<double>(agree) / static_cast<double>(assignments.size());
}

}  // namespace sasv
