// src/model.cpp

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

#include "sasv/model.hpp"

#include <cmath>

namespace sasv {

namespace {

Eigen::MatrixXd gaussian_matrix(Rng& rng, int rows, int cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  // row-major fill order so the draw sequence is layout-independent
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.gaussian();
  return m;
}

}  // namespace

void renormalize_columns_fixed_point(Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (int iter = 0; iter < 4; ++iter) {
      const double norm = m.col(j).norm();
      if (!(norm > 0.0))
        throw NumericError("class vector collapsed to zero norm");
      const Eigen::VectorXd next = m.col(j) / norm;
      if ((next.array() == m.col(j).array()).all()) break;
      m.col(j) = next;
    }
  }
}

ModelParams ModelParams::init(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  ModelParams p;
  p.dims = dims;
  Rng rng(Rng::mix(seed, 0x6d6f64656cULL));

  auto layer = [&](int in, int out) {
    return gaussian_matrix(rng, in, out, 1.0 / std::sqrt(static_cast<double>(in)));
  };
  p.f_asv_w = layer(dims.asv_dim, dims.asv_proj);
  p.f_raw_w1 = layer(dims.raw_dim, dims.raw_hidden);
  p.f_raw_b1 = Eigen::MatrixXd::Zero(1, dims.raw_hidden);
  p.f_raw_w2 = layer(dims.raw_hidden, dims.raw_proj);
  p.f_raw_b2 = Eigen::MatrixXd::Zero(1, dims.raw_proj);
  p.f_c_w = layer(dims.concat_dim(), dims.embed_dim);
  p.f_c_b = Eigen::MatrixXd::Zero(1, dims.embed_dim);
  p.cm_w = layer(dims.embed_dim, 2);
  p.cm_b = Eigen::MatrixXd::Zero(1, 2);
  p.asv_class_w = gaussian_matrix(rng, dims.embed_dim, dims.n_speakers, 1.0);
  p.tts_w = layer(dims.embed_dim, 4);
  p.tts_b = Eigen::MatrixXd::Zero(1, 4);
  p.vc_w = layer(dims.embed_dim, 2);
  p.vc_b = Eigen::MatrixXd::Zero(1, 2);
  p.renormalize_class_columns();
  return p;
}

void ModelParams::renormalize_class_columns() {
  renormalize_columns_fixed_point(asv_class_w);
}

void ModelParams::validate_shapes() const {
  auto expect = [](const Eigen::MatrixXd& m, int r, int c, const char* name) {
    if (m.rows() != r || m.cols() != c)
      throw ContractError(std::string("model params: tensor '") + name +
                          "' has shape " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", expected " +
                          std::to_string(r) + "x" + std::to_string(c));
  };
  expect(f_asv_w, dims.asv_dim, dims.asv_proj, "f_asv_w");
  expect(f_raw_w1, dims.raw_dim, dims.raw_hidden, "f_raw_w1");
  expect(f_raw_b1, 1, dims.raw_hidden, "f_raw_b1");
  expect(f_raw_w2, dims.raw_hidden, dims.raw_proj, "f_raw_w2");
  expect(f_raw_b2, 1, dims.raw_proj, "f_raw_b2");
  expect(f_c_w, dims.concat_dim(), dims.embed_dim, "f_c_w");
  expect(f_c_b, 1, dims.embed_dim, "f_c_b");
  expect(cm_w, dims.embed_dim, 2, "cm_w");
  expect(cm_b, 1, 2, "cm_b");
  expect(asv_class_w, dims.embed_dim, dims.n_speakers, "asv_class_w");
  expect(tts_w, dims.embed_dim, 4, "tts_w");
  expect(tts_b, 1, 4, "tts_b");
  expect(vc_w, dims.embed_dim, 2, "vc_w");
  expect(vc_b, 1, 2, "vc_b");
}

// The plain forwards run every product as MatrixXd * MatrixXd, the same
// kernel the graph ops dispatch to, so graph and plain values agree
// bit-for-bit.
Eigen::RowVectorXd encode_value(const ModelParams& p,
                                const Eigen::RowVectorXd& asv_feat,
                                const Eigen::RowVectorXd& raw_feat,
                                bool normalize) {
  if (asv_feat.size() != p.f_asv_w.rows() || raw_feat.size() != p.f_raw_w1.rows())
    throw ContractError("encode: feature dims do not match model dims");
  const Eigen::MatrixXd ax = asv_feat;
  const Eigen::MatrixXd rx = raw_feat;
  const Eigen::MatrixXd h_asv = ax * p.f_asv_w;
  const Eigen::MatrixXd h1 =
      Eigen::MatrixXd(rx * p.f_raw_w1 + p.f_raw_b1).cwiseMax(0.0);
  const Eigen::MatrixXd h_raw = h1 * p.f_raw_w2 + p.f_raw_b2;
  Eigen::MatrixXd cat(1, h_asv.cols() + h_raw.cols());
  cat << h_asv, h_raw;
  Eigen::MatrixXd e = cat * p.f_c_w + p.f_c_b;
  if (normalize) {
    const double r = e.norm();
    if (!(r > 0.0)) throw NumericError("encode: zero-norm embedding");
    e /= r;
  }
  return e.row(0);
}

double cm_probability(const ModelParams& p,
                      const Eigen::RowVectorXd& embedding) {
  if (embedding.size() != p.cm_w.rows())
    throw ContractError("cm_probability: embedding dim mismatch");
  const Eigen::MatrixXd e = embedding;
  Eigen::MatrixXd z = e * p.cm_w + p.cm_b;
  // same max-subtracted softmax as the graph op
  Eigen::RowVectorXd row = z.row(0);
  row = (row.array() - row.maxCoeff()).exp();
  row /= row.sum();
  return row(0);
}

}  // namespace sasv
