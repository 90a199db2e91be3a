// tests/loss_grad_harness.hpp

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

// Central-difference verification of the composite losses, shared by the unit
// tests and the acceptance suite. Points are sampled away from kinks (relu,
// hinge, clamp) and away from mining-selection ties, since the losses are
// only differentiable there.
//
// The aggregator losses contain a gradient-reversal layer whose backward pass
// deliberately disagrees with the true derivative on the encoder side; those
// losses (and the combined loss with nonzero aggregator weights) are checked
// against finite differences of the head weights, where the gradient is a
// true derivative. The reversed path itself is covered by the exact
// sign-flip checks elsewhere.

#ifndef SASV_TESTS_LOSS_GRAD_HARNESS_HPP_
#define SASV_TESTS_LOSS_GRAD_HARNESS_HPP_

#include <string>
#include <vector>

#include "sasv/grad_check.hpp"
#include "sasv/losses.hpp"
#include "sasv/model.hpp"
#include "sasv/rng.hpp"

namespace sasv::testing {

inline ModelDims harness_dims() {
  ModelDims d;
  d.asv_dim = 4;
  d.raw_dim = 4;
  d.asv_proj = 3;
  d.raw_hidden = 4;
  d.raw_proj = 3;
  d.embed_dim = 5;
  d.n_speakers = 3;
  return d;
}

struct HarnessBatch {
  std::vector<Eigen::RowVectorXd> asv, raw;
  std::vector<bool> is_bonafide;
  std::vector<int> speakers;
  std::vector<Source> sources;
};

inline Eigen::RowVectorXd harness_row(Rng& rng, int n, double s = 1.0) {
  Eigen::RowVectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = s * rng.gaussian();
  return v;
}

inline HarnessBatch harness_batch(Rng& rng, const ModelDims& d) {
  HarnessBatch b;
  auto push = [&](int spk, Source src) {
    b.asv.push_back(harness_row(rng, d.asv_dim));
    b.raw.push_back(harness_row(rng, d.raw_dim));
    b.is_bonafide.push_back(src == Source::kBonafide);
    b.speakers.push_back(spk);
    b.sources.push_back(src);
  };
  push(0, Source::kBonafide);
  push(0, Source::kBonafide);
  push(1, Source::kBonafide);
  push(1, Source::kBonafide);
  push(0, Source::kA01);
  push(1, Source::kA02);
  push(0, Source::kA05);
  push(1, Source::kA06);
  return b;
}

// trainable tensors in ParamVars::trainable_grads order
inline std::vector<ag::MatXd> trainable_points(const ModelParams& p) {
  return {p.f_raw_w1, p.f_raw_b1, p.f_raw_w2, p.f_raw_b2, p.f_c_w,
          p.f_c_b,    p.cm_w,     p.cm_b,     p.asv_class_w,
          p.tts_w,    p.tts_b,    p.vc_w,     p.vc_b};
}

inline ParamVars<double> pv_from_leaves(ag::Tape<double>& t,
                                        const ModelParams& p,
                                        const std::vector<ag::Var<double>>& ls) {
  ParamVars<double> pv;
  pv.f_asv_w = t.constant(p.f_asv_w);
  pv.f_raw_w1 = ls[0];
  pv.f_raw_b1 = ls[1];
  pv.f_raw_w2 = ls[2];
  pv.f_raw_b2 = ls[3];
  pv.f_c_w = ls[4];
  pv.f_c_b = ls[5];
  pv.cm_w = ls[6];
  pv.cm_b = ls[7];
  pv.asv_class_w = ls[8];
  pv.tts_w = ls[9];
  pv.tts_b = ls[10];
  pv.vc_w = ls[11];
  pv.vc_b = ls[12];
  return pv;
}

// head tensors only; the rest of the network is frozen into constants
inline std::vector<ag::MatXd> head_points(const ModelParams& p) {
  return {p.cm_w, p.cm_b, p.asv_class_w, p.tts_w, p.tts_b, p.vc_w, p.vc_b};
}

inline ParamVars<double> pv_from_head_leaves(
    ag::Tape<double>& t, const ModelParams& p,
    const std::vector<ag::Var<double>>& ls) {
  ParamVars<double> pv;
  pv.f_asv_w = t.constant(p.f_asv_w);
  pv.f_raw_w1 = t.constant(p.f_raw_w1);
  pv.f_raw_b1 = t.constant(p.f_raw_b1);
  pv.f_raw_w2 = t.constant(p.f_raw_w2);
  pv.f_raw_b2 = t.constant(p.f_raw_b2);
  pv.f_c_w = t.constant(p.f_c_w);
  pv.f_c_b = t.constant(p.f_c_b);
  pv.cm_w = ls[0];
  pv.cm_b = ls[1];
  pv.asv_class_w = ls[2];
  pv.tts_w = ls[3];
  pv.tts_b = ls[4];
  pv.vc_w = ls[5];
  pv.vc_b = ls[6];
  return pv;
}

template <typename Pv>
std::vector<ag::Var<double>> harness_embed(ag::Tape<double>& t, const Pv& pv,
                                           const HarnessBatch& b) {
  std::vector<ag::Var<double>> embs;
  for (size_t i = 0; i < b.asv.size(); ++i)
    embs.push_back(encode(t, pv, b.asv[i], b.raw[i], true));
  return embs;
}

// Smallest gap between mining candidates across all anchors; selection flips
// under finite differences when this is tiny.
inline double mining_gap(const std::vector<Eigen::RowVectorXd>& embs,
                         const std::vector<int>& speakers,
                         const std::vector<Source>& sources) {
  auto dist = [&](size_t i, size_t j) { return (embs[i] - embs[j]).norm(); };
  std::vector<size_t> tts, vc;
  std::map<int, std::vector<size_t>> bona;
  for (size_t i = 0; i < embs.size(); ++i) {
    if (family_of(sources[i]) == Family::kTts) tts.push_back(i);
    else if (family_of(sources[i]) == Family::kVc) vc.push_back(i);
    else bona[speakers[i]].push_back(i);
  }
  double gap = std::numeric_limits<double>::infinity();
  auto pool_gap = [&](size_t a, const std::vector<size_t>& pool) {
    for (size_t x : pool)
      for (size_t y : pool)
        if (x < y) gap = std::min(gap, std::abs(dist(a, x) - dist(a, y)));
  };
  for (const auto& [spk, utts] : bona) {
    for (size_t a : utts) {
      std::vector<size_t> positives;
      for (size_t c : utts)
        if (c != a) positives.push_back(c);
      pool_gap(a, positives);
      pool_gap(a, tts);
      pool_gap(a, vc);
      for (const auto& [other, other_utts] : bona)
        if (other != spk) pool_gap(a, other_utts);
    }
  }
  return gap;
}

enum class CompositeLoss {
  kCm,
  kAsvMasked,
  kTts,
  kVc,
  kTriplet,
  kSpoofSourceTriplet,
  kTotalNoAggregator,  // all leaves, aggregator weights zero
  kTotalHeads,         // head leaves only, all weights nonzero
};

inline const char* composite_name(CompositeLoss l) {
  switch (l) {
    case CompositeLoss::kCm: return "l_cm";
    case CompositeLoss::kAsvMasked: return "l_asv";
    case CompositeLoss::kTts: return "l_tts";
    case CompositeLoss::kVc: return "l_vc";
    case CompositeLoss::kTriplet: return "triplet";
    case CompositeLoss::kSpoofSourceTriplet: return "l_st";
    case CompositeLoss::kTotalNoAggregator: return "total(no-aggregator)";
    case CompositeLoss::kTotalHeads: return "total(heads)";
  }
  return "?";
}

// One seeded grad check; returns the max relative error. Resamples internally
// until the graph is comfortably away from every kink and mining tie.
inline double composite_grad_check(CompositeLoss which, std::uint64_t seed,
                                   double eps = 1e-5) {
  const ModelDims dims = harness_dims();
  constexpr double kKinkMargin = 1e-3;

  for (std::uint64_t salt = 0;; ++salt) {
    Rng rng(Rng::mix(seed, salt));
    const ModelParams params = ModelParams::init(dims, Rng::mix(seed, salt) ^ 1);
    const HarnessBatch batch = harness_batch(rng, dims);

    if (which == CompositeLoss::kTriplet) {
      std::vector<ag::MatXd> pts{harness_row(rng, 4), harness_row(rng, 4),
                                 harness_row(rng, 4)};
      auto f = [](ag::Tape<double>& t, const std::vector<ag::Var<double>>& v) {
        return triplet_loss(v[0], v[1], v[2], 0.5);
      };
      {
        ag::Tape<double> t;
        std::vector<ag::Var<double>> ls;
        for (const auto& p : pts) ls.push_back(t.leaf(p));
        f(t, ls);
        if (t.min_kink_margin() < kKinkMargin) continue;
      }
      return ag::grad_check_multi(f, pts, eps);
    }

    const bool heads_only = which == CompositeLoss::kTts ||
                            which == CompositeLoss::kVc ||
                            which == CompositeLoss::kTotalHeads;
    auto build = [&](ag::Tape<double>& t,
                     const std::vector<ag::Var<double>>& ls) {
      const ParamVars<double> pv = heads_only
                                       ? pv_from_head_leaves(t, params, ls)
                                       : pv_from_leaves(t, params, ls);
      const auto embs = harness_embed(t, pv, batch);
      switch (which) {
        case CompositeLoss::kCm:
          return cm_loss(t, pv, embs, batch.is_bonafide).loss;
        case CompositeLoss::kAsvMasked:
          return asv_loss_masked(t, pv, embs, batch.speakers,
                                 batch.is_bonafide, 30.0, 0.2)
              .loss;
        case CompositeLoss::kTts:
          return spoof_aggregator_loss(t, pv, embs, batch.sources,
                                       ag::GrlConfig{1.0})
              .tts;
        case CompositeLoss::kVc:
          return spoof_aggregator_loss(t, pv, embs, batch.sources,
                                       ag::GrlConfig{1.0})
              .vc;
        case CompositeLoss::kSpoofSourceTriplet:
          return spoof_source_triplet_loss(t, embs, batch.speakers,
                                           batch.sources, 0.5);
        case CompositeLoss::kTotalNoAggregator: {
          const auto cm = cm_loss(t, pv, embs, batch.is_bonafide);
          const auto asv = asv_loss_masked(t, pv, embs, batch.speakers,
                                           batch.is_bonafide, 30.0, 0.2);
          const auto agg = spoof_aggregator_loss(t, pv, embs, batch.sources,
                                                 ag::GrlConfig{1.0});
          const auto st = spoof_source_triplet_loss(
              t, embs, batch.speakers, batch.sources, 0.5);
          return total_loss(cm.loss, asv.loss, agg.tts, agg.vc, st,
                            LossWeights{1.0, 0.0, 0.0, 0.2})
              .total;
        }
        case CompositeLoss::kTotalHeads: {
          const auto cm = cm_loss(t, pv, embs, batch.is_bonafide);
          const auto asv = asv_loss_masked(t, pv, embs, batch.speakers,
                                           batch.is_bonafide, 30.0, 0.2);
          const auto agg = spoof_aggregator_loss(t, pv, embs, batch.sources,
                                                 ag::GrlConfig{1.0});
          const auto st = spoof_source_triplet_loss(
              t, embs, batch.speakers, batch.sources, 0.5);
          return total_loss(cm.loss, asv.loss, agg.tts, agg.vc, st,
                            LossWeights{1.0, 0.1, 0.1, 0.2})
              .total;
        }
        default:
          throw ContractError("unreachable");
      }
    };

    const std::vector<ag::MatXd> pts =
        heads_only ? head_points(params) : trainable_points(params);

    // probe the base point for kink and mining margins before spending time
    // on finite differences
    {
      ag::Tape<double> t;
      std::vector<ag::Var<double>> ls;
      for (const auto& p : pts) ls.push_back(t.leaf(p));
      const ParamVars<double> pv = heads_only
                                       ? pv_from_head_leaves(t, params, ls)
                                       : pv_from_leaves(t, params, ls);
      const auto embs = harness_embed(t, pv, batch);
      build(t, ls);
      if (t.min_kink_margin() < kKinkMargin) continue;
      const bool uses_mining = which == CompositeLoss::kSpoofSourceTriplet ||
                               which == CompositeLoss::kTotalNoAggregator ||
                               which == CompositeLoss::kTotalHeads;
      if (uses_mining) {
        std::vector<Eigen::RowVectorXd> emb_values;
        for (const auto& e : embs) emb_values.push_back(e.value().row(0));
        if (mining_gap(emb_values, batch.speakers, batch.sources) < kKinkMargin)
          continue;
      }
    }
    return ag::grad_check_multi(build, pts, eps);
  }
}

}  // namespace sasv::testing

#endif  // SASV_TESTS_LOSS_GRAD_HARNESS_HPP_
