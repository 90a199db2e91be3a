// src/projection.cpp

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

#include "sasv/projection.hpp"

#include <cmath>

#include "sasv/error.hpp"

namespace sasv {

Projection2d project_2d(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  detail::require(n >= 3, "project_2d: need at least 3 points");
  detail::require(d >= 1, "project_2d: empty feature dimension");

  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Eigen::MatrixXd centered = points.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw NumericError("project_2d: eigendecomposition failed");
  // eigenvalues come out ascending; the top two components are the last two
  const Eigen::VectorXd& evals = solver.eigenvalues();
  Eigen::VectorXd v1 = solver.eigenvectors().col(d - 1);
  const double l1 = evals(d - 1);

  auto fix_sign = [](Eigen::VectorXd& v) {
    Eigen::Index at = 0;
    v.cwiseAbs().maxCoeff(&at);
    if (v(at) < 0.0) v = -v;
  };
  fix_sign(v1);

  Projection2d out;
  out.coords.resize(n, 2);
  out.coords.col(0) = centered * v1;

  const double l2 = d >= 2 ? evals(d - 2) : 0.0;
  if (d < 2 || l2 <= 1e-12 * std::max(l1, 1.0)) {
    out.coords.col(1).setZero();
    out.rank_deficient = true;
  } else {
    Eigen::VectorXd v2 = solver.eigenvectors().col(d - 2);
    fix_sign(v2);
    out.coords.col(1) = centered * v2;
  }
  return out;
}

}  // namespace sasv
