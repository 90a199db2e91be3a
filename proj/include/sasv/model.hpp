// sasv/model.hpp

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

#ifndef SASV_MODEL_HPP_
#define SASV_MODEL_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sasv/autograd.hpp"
#include "sasv/error.hpp"
#include "sasv/rng.hpp"

namespace sasv {

struct ModelDims {
  int asv_dim = 32;     // input width of the frozen speaker branch
  int raw_dim = 32;     // input width of the trainable raw branch
  int asv_proj = 32;    // output width of the frozen projection
  int raw_hidden = 32;  // hidden width of the raw branch
  int raw_proj = 32;    // output width of the raw branch
  int embed_dim = 64;   // shared embedding width
  int n_speakers = 8;   // training speakers, class count of the ASV head

  int concat_dim() const { return asv_proj + raw_proj; }
  void validate() const {
    detail::require(asv_dim >= 1 && raw_dim >= 1 && asv_proj >= 1 &&
                        raw_hidden >= 1 && raw_proj >= 1 && embed_dim >= 1,
                    "model dims: all widths must be >= 1");
    detail::require(n_speakers >= 2, "model dims: n_speakers must be >= 2");
  }
};

// All weight tensors of the network. The speaker branch projection is frozen
// (excluded from the trainable set); the ASV head keeps one unit-norm column
// per training speaker.
//
// Row-vector convention: activations are 1xN rows, layers multiply on the
// right, so a dense layer is `x * W + b` with W of shape (in x out).
struct ModelParams {
  ModelDims dims;

  Eigen::MatrixXd f_asv_w;              // asv_dim x asv_proj, frozen
  Eigen::MatrixXd f_raw_w1, f_raw_b1;   // raw_dim x raw_hidden, 1 x raw_hidden
  Eigen::MatrixXd f_raw_w2, f_raw_b2;   // raw_hidden x raw_proj, 1 x raw_proj
  Eigen::MatrixXd f_c_w, f_c_b;         // concat_dim x embed_dim, 1 x embed_dim
  Eigen::MatrixXd cm_w, cm_b;           // embed_dim x 2, col 0 = bonafide
  Eigen::MatrixXd asv_class_w;          // embed_dim x n_speakers, unit columns
  Eigen::MatrixXd tts_w, tts_b;         // embed_dim x 4
  Eigen::MatrixXd vc_w, vc_b;           // embed_dim x 2

  static ModelParams init(const ModelDims& dims, std::uint64_t seed);

  // Visits every tensor in fixed order with (name, tensor, trainable).
  template <typename F>
  void for_each_tensor(F&& f) {
    f("f_asv_w", f_asv_w, false);
    f("f_raw_w1", f_raw_w1, true);
    f("f_raw_b1", f_raw_b1, true);
    f("f_raw_w2", f_raw_w2, true);
    f("f_raw_b2", f_raw_b2, true);
    f("f_c_w", f_c_w, true);
    f("f_c_b", f_c_b, true);
    f("cm_w", cm_w, true);
    f("cm_b", cm_b, true);
    f("asv_class_w", asv_class_w, true);
    f("tts_w", tts_w, true);
    f("tts_b", tts_b, true);
    f("vc_w", vc_w, true);
    f("vc_b", vc_b, true);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    const_cast<ModelParams*>(this)->for_each_tensor(
        [&](const char* n, Eigen::MatrixXd& m, bool t) {
          f(n, static_cast<const Eigen::MatrixXd&>(m), t);
        });
  }

  // Renormalizes each ASV class column to unit length, iterating to a fixed
  // point so that already-normalized columns are left bit-identical.
  void renormalize_class_columns();

  void validate_shapes() const;
};

// Fixed-point column normalization shared by init and the optimizer.
void renormalize_columns_fixed_point(Eigen::MatrixXd& m);

// Graph-side handles to the parameters for one training step. The frozen
// branch enters as a constant, so its gradient is exactly zero.
template <typename Scalar>
struct ParamVars {
  ag::Var<Scalar> f_asv_w;
  ag::Var<Scalar> f_raw_w1, f_raw_b1, f_raw_w2, f_raw_b2;
  ag::Var<Scalar> f_c_w, f_c_b;
  ag::Var<Scalar> cm_w, cm_b;
  ag::Var<Scalar> asv_class_w;
  ag::Var<Scalar> tts_w, tts_b, vc_w, vc_b;

  static ParamVars make(ag::Tape<Scalar>& tape, const ModelParams& p) {
    ParamVars pv;
    auto put = [&](const Eigen::MatrixXd& m, bool trainable) {
      return tape.leaf(m.template cast<Scalar>(), trainable);
    };
    pv.f_asv_w = put(p.f_asv_w, false);
    pv.f_raw_w1 = put(p.f_raw_w1, true);
    pv.f_raw_b1 = put(p.f_raw_b1, true);
    pv.f_raw_w2 = put(p.f_raw_w2, true);
    pv.f_raw_b2 = put(p.f_raw_b2, true);
    pv.f_c_w = put(p.f_c_w, true);
    pv.f_c_b = put(p.f_c_b, true);
    pv.cm_w = put(p.cm_w, true);
    pv.cm_b = put(p.cm_b, true);
    pv.asv_class_w = put(p.asv_class_w, true);
    pv.tts_w = put(p.tts_w, true);
    pv.tts_b = put(p.tts_b, true);
    pv.vc_w = put(p.vc_w, true);
    pv.vc_b = put(p.vc_b, true);
    return pv;
  }

  // Gradients of the trainable tensors, in for_each_tensor order.
  std::vector<ag::MatX<Scalar>> trainable_grads() const {
    return {f_raw_w1.grad(), f_raw_b1.grad(), f_raw_w2.grad(),
            f_raw_b2.grad(), f_c_w.grad(),    f_c_b.grad(),
            cm_w.grad(),     cm_b.grad(),     asv_class_w.grad(),
            tts_w.grad(),    tts_b.grad(),    vc_w.grad(),
            vc_b.grad()};
  }
};

// Shared embedding: concatenates the frozen speaker projection with the
// trainable raw branch, mixes through a linear layer, and optionally
// L2-normalizes.
template <typename Scalar>
ag::Var<Scalar> encode(ag::Tape<Scalar>& t, const ParamVars<Scalar>& pv,
                       ag::Var<Scalar> asv_x, ag::Var<Scalar> raw_x,
                       bool normalize) {
  using namespace ag;
  if (asv_x.cols() != pv.f_asv_w.rows() || raw_x.cols() != pv.f_raw_w1.rows())
    throw ContractError("encode: feature dims do not match model dims");
  auto h_asv = matmul(asv_x, pv.f_asv_w);
  auto h1 = relu(add(matmul(raw_x, pv.f_raw_w1), pv.f_raw_b1));
  auto h_raw = add(matmul(h1, pv.f_raw_w2), pv.f_raw_b2);
  auto e = add(matmul(concat(h_asv, h_raw), pv.f_c_w), pv.f_c_b);
  return normalize ? l2_normalize(e) : e;
}

template <typename Scalar>
ag::Var<Scalar> encode(ag::Tape<Scalar>& t, const ParamVars<Scalar>& pv,
                       const Eigen::RowVectorXd& asv_feat,
                       const Eigen::RowVectorXd& raw_feat, bool normalize) {
  auto ax = t.constant(asv_feat.template cast<Scalar>());
  auto rx = t.constant(raw_feat.template cast<Scalar>());
  return encode(t, pv, ax, rx, normalize);
}

// Tape-free forward passes for scoring. These mirror the graph ops exactly,
// so values agree bit-for-bit with the graph path.
Eigen::RowVectorXd encode_value(const ModelParams& p,
                                const Eigen::RowVectorXd& asv_feat,
                                const Eigen::RowVectorXd& raw_feat,
                                bool normalize);
double cm_probability(const ModelParams& p,
                      const Eigen::RowVectorXd& embedding);

}  // namespace sasv

#endif  // SASV_MODEL_HPP_
