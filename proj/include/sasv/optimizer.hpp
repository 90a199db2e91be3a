// sasv/optimizer.hpp

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

#ifndef SASV_OPTIMIZER_HPP_
#define SASV_OPTIMIZER_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sasv/error.hpp"
#include "sasv/model.hpp"

namespace sasv {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive-moment gradient descent with bias correction. After every step the
// ASV class columns are renormalized to unit length; that renormalization is
// a fixed point on already-unit columns, so a zero-gradient step leaves the
// parameters bit-identical.
class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParams& params, const AdamConfig& cfg) : cfg_(cfg) {
    detail::require(cfg.learning_rate > 0.0,
                    "adam: learning_rate must be positive");
    params.for_each_tensor([&](const char*, const Eigen::MatrixXd& m,
                               bool trainable) {
      if (!trainable) return;
      m_.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
      v_.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
    });
  }

  // grads must follow ModelParams::for_each_tensor order over the trainable
  // tensors, as produced by ParamVars::trainable_grads().
  void step(ModelParams& params, const std::vector<Eigen::MatrixXd>& grads) {
    detail::require(grads.size() == m_.size(),
                    "adam: gradient list size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    size_t k = 0;
    params.for_each_tensor([&](const char* name, Eigen::MatrixXd& p,
                               bool trainable) {
      if (!trainable) return;
      const Eigen::MatrixXd& g = grads[k];
      if (g.rows() != p.rows() || g.cols() != p.cols())
        throw ContractError(std::string("adam: gradient shape mismatch for '") +
                            name + "'");
      m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g;
      v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
      const Eigen::MatrixXd m_hat = m_[k] / c1;
      const Eigen::MatrixXd v_hat = v_[k] / c2;
      p -= cfg_.learning_rate *
           m_hat.cwiseQuotient(
               (v_hat.cwiseSqrt().array() + cfg_.epsilon).matrix());
      ++k;
    });
    params.renormalize_class_columns();
  }

  long step_count() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

}  // namespace sasv

#endif  // SASV_OPTIMIZER_HPP_
