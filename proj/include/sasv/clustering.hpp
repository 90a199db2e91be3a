// sasv/clustering.hpp

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

#ifndef SASV_CLUSTERING_HPP_
#define SASV_CLUSTERING_HPP_

#include <Eigen/Dense>
#include <vector>

namespace sasv {

// Average-linkage agglomerative clustering under cosine distance. Points are
// rows. Merging continues until k clusters remain; equal-distance merges are
// resolved lexicographically on (min cluster index, max cluster index), and
// a merged cluster keeps the smaller index, so the partition is a pure
// function of the input. Returned labels are 0..k-1 ordered by each
// cluster's smallest row index.
std::vector<int> agglomerative_cluster(const Eigen::MatrixXd& points, int k);

// Fraction of points whose cluster's dominant reference label matches their
// own; 1.0 means clusters reproduce the labels exactly.
double cluster_purity(const std::vector<int>& assignments,
                      const std::vector<int>& labels);

}  // namespace sasv

#endif  // SASV_CLUSTERING_HPP_
