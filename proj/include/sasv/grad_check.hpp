// sasv/grad_check.hpp

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

#ifndef SASV_GRAD_CHECK_HPP_
#define SASV_GRAD_CHECK_HPP_

#include <cmath>
#include <vector>

#include "sasv/autograd.hpp"
#include "sasv/error.hpp"

namespace sasv {
namespace ag {

// Central-difference verification of reverse-mode gradients, always in double
// precision. `f` builds a scalar graph from leaves placed at `points`;
// the result is max over all coordinates of
//   |analytic - central_difference| / max(1, |analytic|).
// Callers are responsible for sampling away from kinks (relu at 0 etc.);
// Tape::min_kink_margin() helps with that.
template <typename F>
double grad_check_multi(F&& f, const std::vector<MatXd>& points, double eps) {
  if (!(eps > 0.0 && eps <= 1e-3))
    throw ContractError("grad_check: eps must be in (0, 1e-3]");

  Tape<double> tape;
  std::vector<Var<double>> leaves;
  leaves.reserve(points.size());
  for (const auto& p : points) leaves.push_back(tape.leaf(p));
  Var<double> root = f(tape, leaves);
  if (root.value().size() != 1)
    throw ContractError("grad_check: function output must be a scalar");
  tape.backward(root);
  std::vector<MatXd> analytic;
  analytic.reserve(leaves.size());
  for (auto v : leaves) analytic.push_back(v.grad());

  auto eval_at = [&](const std::vector<MatXd>& pts) {
    Tape<double> t;
    std::vector<Var<double>> ls;
    ls.reserve(pts.size());
    for (const auto& p : pts) ls.push_back(t.leaf(p));
    return f(t, ls).value()(0, 0);
  };

  double worst = 0.0;
  std::vector<MatXd> probe = points;
  for (size_t t = 0; t < points.size(); ++t) {
    for (Eigen::Index k = 0; k < points[t].size(); ++k) {
      const double x0 = probe[t](k);
      probe[t](k) = x0 + eps;
      const double fp = eval_at(probe);
      probe[t](k) = x0 - eps;
      const double fm = eval_at(probe);
      probe[t](k) = x0;
      const double fd = (fp - fm) / (2.0 * eps);
      const double a = analytic[t](k);
      const double err = std::abs(a - fd) / std::max(1.0, std::abs(a));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// Single-tensor convenience form.
template <typename F>
double grad_check(F&& f, const MatXd& point, double eps) {
  auto wrap = [&f](Tape<double>& t, const std::vector<Var<double>>& ls) {
    return f(t, ls[0]);
  };
  return grad_check_multi(wrap, std::vector<MatXd>{point}, eps);
}

}  // namespace ag
}  // namespace sasv

#endif  // SASV_GRAD_CHECK_HPP_
