// sasv/projection.hpp

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

#ifndef SASV_PROJECTION_HPP_
#define SASV_PROJECTION_HPP_

#include <Eigen/Dense>

namespace sasv {

struct Projection2d {
  Eigen::MatrixXd coords;      // n x 2, var(col 0) >= var(col 1)
  bool rank_deficient = false; // second component zeroed for rank < 2 input
};

// Mean-centered projection of row-wise points onto the top two principal
// components. Component signs are fixed so each component's largest-magnitude
// coefficient is positive.
Projection2d project_2d(const Eigen::MatrixXd& points);

}  // namespace sasv

#endif  // SASV_PROJECTION_HPP_
