// src/trainer.cpp

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

#include "sasv/trainer.hpp"

#include <cmath>
#include <cstdio>

#include "sasv/optimizer.hpp"
#include "sasv/rng.hpp"
#include "sasv/scoring.hpp"

namespace sasv {

void TrainConfig::validate() const {
  detail::require(epochs >= 1, "train config: epochs must be >= 1");
  detail::require(batch_size >= 8, "train config: batch_size must be >= 8");
  detail::require(learning_rate > 0.0,
                  "train config: learning_rate must be positive");
  detail::require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
                  "train config: moment decays must lie in [0, 1)");
  detail::require(epsilon > 0.0, "train config: epsilon must be positive");
  detail::require(margin >= 0.0, "train config: margin must be >= 0");
  detail::require(grl_lambda >= 0.0, "train config: grl_lambda must be >= 0");
  detail::require(aam_scale > 0.0, "train config: aam_scale must be positive");
  detail::require(aam_margin >= 0.0, "train config: aam_margin must be >= 0");
  detail::require(fusion_weight >= 0.0,
                  "train config: fusion_weight must be >= 0");
  detail::require(embed_dim >= 1 && asv_proj_dim >= 1 && raw_hidden_dim >= 1 &&
                      raw_proj_dim >= 1,
                  "train config: model widths must be >= 1");
}

std::string format_step_line(long step, const LossBreakdown& b) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%ld %.6g %.6g %.6g %.6g %.6g %.6g\n", step,
                b.l_cm, b.l_asv, b.l_tts, b.l_vc, b.l_st, b.total);
  return buf;
}

namespace {

[[noreturn]] void numeric_abort(long step, const std::string& component,
                                const std::string& detail) {
  throw NumericError("training aborted at step " + std::to_string(step) +
                     ": " + component + " " + detail);
}

void check_components_finite(long step, const LossBreakdown& b) {
  const std::pair<const char*, double> comps[] = {
      {"l_cm", b.l_cm}, {"l_asv", b.l_asv}, {"l_tts", b.l_tts},
      {"l_vc", b.l_vc}, {"l_st", b.l_st},   {"total", b.total}};
  for (const auto& [name, value] : comps)
    if (!std::isfinite(value)) numeric_abort(step, name, "is not finite");
}

}  // namespace

TrainResult train(const Dataset& ds, const TrainConfig& cfg,
                  std::ostream* step_log, int threads) {
  cfg.validate();
  const auto& train_idx = ds.indices_of(Split::kTrain);
  detail::require(!train_idx.empty(), "train: empty training split");

  ModelDims dims;
  dims.asv_dim =
      static_cast<int>(ds.utterances[train_idx.front()].asv_features.size());
  dims.raw_dim =
      static_cast<int>(ds.utterances[train_idx.front()].raw_features.size());
  dims.asv_proj = cfg.asv_proj_dim;
  dims.raw_hidden = cfg.raw_hidden_dim;
  dims.raw_proj = cfg.raw_proj_dim;
  dims.embed_dim = cfg.embed_dim;
  dims.n_speakers = ds.n_train_speakers;

  TrainResult result;
  result.params = ModelParams::init(dims, cfg.seed);
  const Eigen::MatrixXd frozen_branch = result.params.f_asv_w;

  AdamOptimizer opt(result.params,
                    {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon});

  const long steps_per_epoch =
      (static_cast<long>(train_idx.size()) + cfg.batch_size - 1) /
      cfg.batch_size;
  const long total_steps = steps_per_epoch * cfg.epochs;

  const bool have_dev = !ds.indices_of(Split::kDev).empty();
  std::vector<TrialRecord> dev_trials;
  if (have_dev) dev_trials = build_trials(ds, Split::kDev, cfg.seed);

  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (long s = 0; s < steps_per_epoch; ++s, ++step) {
      // optional warmup of the adversarial strength over the first 20% of
      // training
      ag::GrlConfig grl_cfg{cfg.grl_lambda};
      if (cfg.grl_ramp) {
        const double ramp_steps = std::max(1.0, 0.2 * total_steps);
        grl_cfg.lambda =
            cfg.grl_lambda * std::min(1.0, static_cast<double>(step) / ramp_steps);
      }

      const Batch batch =
          sample_batch(ds, cfg.batch_size, Rng::mix(cfg.seed, static_cast<std::uint64_t>(step)));

      ag::Tape<double> tape;
      const auto pv = ParamVars<double>::make(tape, result.params);
      std::vector<ag::Var<double>> embeddings;
      std::vector<bool> is_bonafide;
      std::vector<int> speakers;
      std::vector<Source> sources;
      embeddings.reserve(batch.items.size());
      for (int idx : batch.items) {
        const Utterance& u = ds.utterances[static_cast<size_t>(idx)];
        embeddings.push_back(encode(tape, pv, u.asv_features, u.raw_features,
                                    cfg.normalize_embeddings));
        is_bonafide.push_back(u.bonafide());
        speakers.push_back(u.speaker);
        sources.push_back(u.source);
      }

      const auto cm = cm_loss(tape, pv, embeddings, is_bonafide);
      const auto asv =
          asv_loss_masked(tape, pv, embeddings, speakers, is_bonafide,
                          cfg.aam_scale, cfg.aam_margin);
      const auto agg =
          spoof_aggregator_loss(tape, pv, embeddings, sources, grl_cfg);
      const auto st = spoof_source_triplet_loss(
          tape, embeddings, speakers, sources, cfg.margin, Mining::kHardest);
      auto tot = total_loss(cm.loss, asv.loss, agg.tts, agg.vc, st, cfg.weights);
      tot.breakdown.asv_empty_mask = asv.empty_mask;

      check_components_finite(step, tot.breakdown);
      if (!tot.breakdown.decomposition_exact())
        numeric_abort(step, "total", "violates the loss decomposition");

      try {
        tape.backward(tot.total);
      } catch (const NumericError& e) {
        numeric_abort(step, "backward", std::string("failed: ") + e.what());
      }
      auto grads = pv.trainable_grads();
      {
        size_t k = 0;
        const char* names[] = {"f_raw_w1", "f_raw_b1", "f_raw_w2", "f_raw_b2",
                               "f_c_w",    "f_c_b",    "cm_w",     "cm_b",
                               "asv_class_w", "tts_w", "tts_b",    "vc_w",
                               "vc_b"};
        for (const auto& g : grads) {
          if (!g.allFinite())
            numeric_abort(step, std::string("gradient of ") + names[k],
                          "is not finite");
          ++k;
        }
      }
      opt.step(result.params, grads);

      result.history.steps.push_back({step, tot.breakdown});
      if (step_log) (*step_log) << format_step_line(step, tot.breakdown);
    }

    if (have_dev) {
      const EmbeddingTable table =
          embed_utterances(result.params, ds, Split::kDev,
                           cfg.normalize_embeddings, threads);
      const auto scored = score_trials(dev_trials, table, cfg.fusion_weight);
      result.history.dev_metrics.push_back(compute_metric_suite(scored));
    }
  }

  // the frozen branch must come out of training untouched
  if (!(frozen_branch.array() == result.params.f_asv_w.array()).all())
    throw NumericError("train: frozen speaker branch was modified");
  return result;
}

}  // namespace sasv
