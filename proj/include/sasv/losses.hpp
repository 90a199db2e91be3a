// sasv/losses.hpp

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

#ifndef SASV_LOSSES_HPP_
#define SASV_LOSSES_HPP_

#include <map>
#include <string>
#include <vector>

#include "sasv/autograd.hpp"
#include "sasv/dataset.hpp"
#include "sasv/error.hpp"
#include "sasv/model.hpp"
#include "sasv/rng.hpp"

namespace sasv {

// Weights of the combined objective:
//   total = l_cm + asv*l_asv + tts*l_tts + vc*l_vc + st*l_st
struct LossWeights {
  double asv = 1.0;
  double tts = 0.1;
  double vc = 0.1;
  double st = 0.2;
};

// Per-step loss components. `total` is produced by the same left-to-right
// arithmetic as recompute_total(), so the decomposition identity is exact
// in double precision, not merely approximate.
struct LossBreakdown {
  double l_cm = 0, l_asv = 0, l_tts = 0, l_vc = 0, l_st = 0, total = 0;
  LossWeights weights;
  bool asv_empty_mask = false;

  double recompute_total() const {
    return (((l_cm + weights.asv * l_asv) + weights.tts * l_tts) +
            weights.vc * l_vc) +
           weights.st * l_st;
  }
  bool decomposition_exact() const { return total == recompute_total(); }
};

namespace detail_loss {

// Left-to-right running sum divided by the count; fixed association order
// keeps training logs reproducible.
template <typename Scalar>
ag::Var<Scalar> mean_of(ag::Tape<Scalar>& t,
                        const std::vector<ag::Var<Scalar>>& terms) {
  ag::Var<Scalar> acc = terms.front();
  for (size_t i = 1; i < terms.size(); ++i) acc = ag::add(acc, terms[i]);
  return ag::scale(acc, Scalar(1) / static_cast<Scalar>(terms.size()));
}

template <typename Scalar>
ag::Var<Scalar> zero_scalar(ag::Tape<Scalar>& t) {
  return t.constant(ag::MatX<Scalar>::Zero(1, 1));
}

}  // namespace detail_loss

// Countermeasure head: two-logit softmax over the shared embedding. The
// bonafide probability is column 0; the per-sample loss -log p[label] equals
// binary cross entropy in p_bonafide.
template <typename Scalar>
struct CmLossResult {
  ag::Var<Scalar> loss;
  std::vector<ag::Var<Scalar>> p_bonafide;
};

template <typename Scalar>
CmLossResult<Scalar> cm_loss(ag::Tape<Scalar>& t, const ParamVars<Scalar>& pv,
                             const std::vector<ag::Var<Scalar>>& embeddings,
                             const std::vector<bool>& is_bonafide) {
  using namespace ag;
  detail::require(!embeddings.empty(), "cm_loss: empty batch");
  detail::require(embeddings.size() == is_bonafide.size(),
                  "cm_loss: batch size mismatch");
  CmLossResult<Scalar> out;
  std::vector<Var<Scalar>> terms;
  terms.reserve(embeddings.size());
  for (size_t i = 0; i < embeddings.size(); ++i) {
    auto p = softmax(add(matmul(embeddings[i], pv.cm_w), pv.cm_b));
    out.p_bonafide.push_back(pick(p, 0, 0));
    terms.push_back(scale(log(pick(p, 0, is_bonafide[i] ? 0 : 1)), Scalar(-1)));
  }
  out.loss = detail_loss::mean_of(t, terms);
  return out;
}

// Speaker head with a bonafide mask: spoofed samples never enter the graph,
// so the loss and every gradient are bit-for-bit independent of them.
// Additive-angular-margin softmax over cosine logits; with margin 0 the
// logits are s*cos(theta) directly, which reduces to plain softmax
// cross entropy.
template <typename Scalar>
struct AsvLossResult {
  ag::Var<Scalar> loss;
  bool empty_mask = false;
};

template <typename Scalar>
AsvLossResult<Scalar> asv_loss_masked(
    ag::Tape<Scalar>& t, const ParamVars<Scalar>& pv,
    const std::vector<ag::Var<Scalar>>& embeddings,
    const std::vector<int>& speaker_labels,
    const std::vector<bool>& is_bonafide, Scalar s, Scalar m_aam) {
  using namespace ag;
  detail::require(!embeddings.empty(), "asv_loss_masked: empty batch");
  detail::require(embeddings.size() == speaker_labels.size() &&
                      embeddings.size() == is_bonafide.size(),
                  "asv_loss_masked: batch size mismatch");
  detail::require(s > Scalar(0), "asv_loss_masked: scale must be positive");
  detail::require(m_aam >= Scalar(0), "asv_loss_masked: margin must be >= 0");
  const Eigen::Index n_classes = pv.asv_class_w.cols();

  // unit-length class directions, independent of the stored column norms
  std::vector<Var<Scalar>> class_dirs;
  class_dirs.reserve(static_cast<size_t>(n_classes));
  for (Eigen::Index j = 0; j < n_classes; ++j)
    class_dirs.push_back(l2_normalize(col(pv.asv_class_w, j)));

  std::vector<Var<Scalar>> terms;
  for (size_t i = 0; i < embeddings.size(); ++i) {
    if (!is_bonafide[i]) continue;
    const int y = speaker_labels[i];
    detail::require(y >= 0 && y < n_classes,
                    "asv_loss_masked: speaker label " + std::to_string(y) +
                        " out of range");
    auto ehat = l2_normalize(embeddings[i]);
    Var<Scalar> logits;
    for (Eigen::Index j = 0; j < n_classes; ++j) {
      auto c = matmul(ehat, class_dirs[static_cast<size_t>(j)]);
      Var<Scalar> lj;
      if (j == y && m_aam != Scalar(0)) {
        // s * cos(theta_y + m); cosine is clamped just inside [-1, 1] so the
        // angle stays differentiable
        auto theta = acos(clamp(c, Scalar(-1) + Scalar(1e-7),
                                Scalar(1) - Scalar(1e-7)));
        lj = scale(cos(add_scalar(theta, m_aam)), s);
      } else {
        lj = scale(c, s);
      }
      logits = (j == 0) ? lj : concat(logits, lj);
    }
    auto p = softmax(logits);
    terms.push_back(scale(log(pick(p, 0, y)), Scalar(-1)));
  }
  if (terms.empty()) return {detail_loss::zero_scalar(t), true};
  return {detail_loss::mean_of(t, terms), false};
}

// Spoof aggregators: per family, a head predicts the concrete attack label
// behind a gradient-reversal layer. The heads learn to separate attacks while
// the encoder is pushed to blur them, which aggregates each family into one
// cluster. Missing families contribute an exact zero.
template <typename Scalar>
struct AggregatorLossResult {
  ag::Var<Scalar> tts;
  ag::Var<Scalar> vc;
};

template <typename Scalar>
AggregatorLossResult<Scalar> spoof_aggregator_loss(
    ag::Tape<Scalar>& t, const ParamVars<Scalar>& pv,
    const std::vector<ag::Var<Scalar>>& embeddings,
    const std::vector<Source>& sources, const ag::GrlConfig& grl_cfg) {
  using namespace ag;
  detail::require(embeddings.size() == sources.size(),
                  "spoof_aggregator_loss: batch size mismatch");
  std::vector<Var<Scalar>> tts_terms, vc_terms;
  for (size_t i = 0; i < embeddings.size(); ++i) {
    const Family fam = family_of(sources[i]);
    if (fam == Family::kNone) continue;
    const int label = family_class_of(sources[i]);
    auto g = grl(embeddings[i], grl_cfg);
    if (fam == Family::kTts) {
      auto p = softmax(add(matmul(g, pv.tts_w), pv.tts_b));
      tts_terms.push_back(scale(log(pick(p, 0, label)), Scalar(-1)));
    } else {
      auto p = softmax(add(matmul(g, pv.vc_w), pv.vc_b));
      vc_terms.push_back(scale(log(pick(p, 0, label)), Scalar(-1)));
    }
  }
  AggregatorLossResult<Scalar> out;
  out.tts = tts_terms.empty() ? detail_loss::zero_scalar(t)
                              : detail_loss::mean_of(t, tts_terms);
  out.vc = vc_terms.empty() ? detail_loss::zero_scalar(t)
                            : detail_loss::mean_of(t, vc_terms);
  return out;
}

// Hinged triplet loss max(0, ||a-p|| - ||a-n|| + m).
template <typename Scalar>
ag::Var<Scalar> triplet_loss(ag::Var<Scalar> a, ag::Var<Scalar> p,
                             ag::Var<Scalar> n, Scalar margin) {
  using namespace ag;
  detail::require(margin >= Scalar(0), "triplet_loss: margin must be >= 0");
  if (a.rows() != p.rows() || a.cols() != p.cols() || a.rows() != n.rows() ||
      a.cols() != n.cols())
    throw ContractError("triplet_loss: embedding dims differ");
  auto d_ap = l2_norm(sub(a, p));
  auto d_an = l2_norm(sub(a, n));
  return relu(add_scalar(sub(d_ap, d_an), margin));
}

enum class Mining { kHardest, kRandom };

// Spoof-source triplet loss. Every bonafide utterance anchors one positive of
// its own speaker plus three kinds of negatives: the TTS family, the VC
// family, and one bonafide negative per other speaker in the batch. The mean
// over anchors is returned.
//
// kHardest picks the farthest positive and the nearest negative per category
// (ties broken by lowest batch index); kRandom draws them from the seed.
template <typename Scalar>
ag::Var<Scalar> spoof_source_triplet_loss(
    ag::Tape<Scalar>& t, const std::vector<ag::Var<Scalar>>& embeddings,
    const std::vector<int>& speakers, const std::vector<Source>& sources,
    Scalar margin, Mining mining = Mining::kHardest,
    std::uint64_t mining_seed = 0) {
  using namespace ag;
  const size_t n = embeddings.size();
  detail::require(n == speakers.size() && n == sources.size(),
                  "spoof_source_triplet_loss: batch size mismatch");

  std::vector<size_t> tts, vc;
  std::map<int, std::vector<size_t>> bona_by_speaker;
  for (size_t i = 0; i < n; ++i) {
    switch (family_of(sources[i])) {
      case Family::kTts: tts.push_back(i); break;
      case Family::kVc: vc.push_back(i); break;
      case Family::kNone: bona_by_speaker[speakers[i]].push_back(i); break;
    }
  }
  detail::require(!tts.empty(),
                  "spoof_source_triplet_loss: batch has no TTS sample");
  detail::require(!vc.empty(),
                  "spoof_source_triplet_loss: batch has no VC sample");
  for (const auto& [spk, utts] : bona_by_speaker)
    detail::require(utts.size() >= 2,
                    "spoof_source_triplet_loss: speaker " +
                        std::to_string(spk) +
                        " has a bonafide anchor but no positive");

  // mining works on plain distances; gradients flow only through the
  // selected triplets
  auto dist = [&](size_t i, size_t j) {
    return (embeddings[i].value() - embeddings[j].value()).norm();
  };
  Rng rng(mining_seed);
  auto pick_nearest = [&](size_t a, const std::vector<size_t>& pool) {
    if (mining == Mining::kRandom)
      return pool[rng.uniform_index(pool.size())];
    size_t best = pool.front();
    for (size_t c : pool)
      if (dist(a, c) < dist(a, best)) best = c;
    return best;
  };

  std::vector<Var<Scalar>> anchor_terms;
  for (const auto& [spk, utts] : bona_by_speaker) {
    for (size_t a : utts) {
      // positive: same speaker, different utterance
      size_t pos = a;
      if (mining == Mining::kRandom) {
        do {
          pos = utts[rng.uniform_index(utts.size())];
        } while (pos == a);
      } else {
        double worst = -1.0;
        for (size_t c : utts) {
          if (c == a) continue;
          if (dist(a, c) > worst) {
            worst = dist(a, c);
            pos = c;
          }
        }
      }
      auto term = add(triplet_loss(embeddings[a], embeddings[pos],
                                   embeddings[pick_nearest(a, tts)], margin),
                      triplet_loss(embeddings[a], embeddings[pos],
                                   embeddings[pick_nearest(a, vc)], margin));
      for (const auto& [other, other_utts] : bona_by_speaker) {
        if (other == spk) continue;
        term = add(term,
                   triplet_loss(embeddings[a], embeddings[pos],
                                embeddings[pick_nearest(a, other_utts)],
                                margin));
      }
      anchor_terms.push_back(term);
    }
  }
  if (anchor_terms.empty()) return detail_loss::zero_scalar(t);
  return detail_loss::mean_of(t, anchor_terms);
}

// Weighted sum of the five losses. The graph applies the same left-to-right
// arithmetic as LossBreakdown::recompute_total(), making the decomposition
// identity exact.
template <typename Scalar>
struct TotalLossResult {
  ag::Var<Scalar> total;
  LossBreakdown breakdown;
};

template <typename Scalar>
TotalLossResult<Scalar> total_loss(ag::Var<Scalar> l_cm, ag::Var<Scalar> l_asv,
                                   ag::Var<Scalar> l_tts, ag::Var<Scalar> l_vc,
                                   ag::Var<Scalar> l_st,
                                   const LossWeights& w) {
  using namespace ag;
  TotalLossResult<Scalar> out;
  out.total = add(add(add(add(l_cm, scale(l_asv, static_cast<Scalar>(w.asv))),
                          scale(l_tts, static_cast<Scalar>(w.tts))),
                      scale(l_vc, static_cast<Scalar>(w.vc))),
                  scale(l_st, static_cast<Scalar>(w.st)));
  out.breakdown.l_cm = static_cast<double>(l_cm.value()(0, 0));
  out.breakdown.l_asv = static_cast<double>(l_asv.value()(0, 0));
  out.breakdown.l_tts = static_cast<double>(l_tts.value()(0, 0));
  out.breakdown.l_vc = static_cast<double>(l_vc.value()(0, 0));
  out.breakdown.l_st = static_cast<double>(l_st.value()(0, 0));
  out.breakdown.total = static_cast<double>(out.total.value()(0, 0));
  out.breakdown.weights = w;
  return out;
}

}  // namespace sasv

#endif  // SASV_LOSSES_HPP_
