// sasv/trainer.hpp

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

#ifndef SASV_TRAINER_HPP_
#define SASV_TRAINER_HPP_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "sasv/dataset.hpp"
#include "sasv/losses.hpp"
#include "sasv/metrics.hpp"
#include "sasv/model.hpp"

namespace sasv {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  LossWeights weights;          // lambda1..lambda4
  double margin = 0.5;          // triplet margin
  double grl_lambda = 1.0;
  bool grl_ramp = false;        // linear 0 -> grl_lambda over first 20% steps
  std::uint64_t seed = 1234;
  bool normalize_embeddings = true;
  double aam_scale = 30.0;
  double aam_margin = 0.2;
  double fusion_weight = 1.0;   // used for per-epoch dev metrics
  int embed_dim = 64;
  int asv_proj_dim = 32;
  int raw_hidden_dim = 32;
  int raw_proj_dim = 32;

  void validate() const;
};

struct StepRecord {
  long step = 0;  // global step index, starting at 0
  LossBreakdown losses;
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  std::vector<MetricSuite> dev_metrics;  // one entry per epoch
};

struct TrainResult {
  ModelParams params;
  TrainHistory history;
};

// One training-log line: "step l_cm l_asv l_tts l_vc l_st total",
// space-separated, 6 significant digits.
std::string format_step_line(long step, const LossBreakdown& b);

// Full training loop: sample batch, encode, all five losses, combined loss,
// backward, optimizer step. The run is a pure function of (dataset, config);
// a NaN anywhere aborts with the step index and the component responsible.
// `threads` only parallelizes the per-epoch dev evaluation.
TrainResult train(const Dataset& ds, const TrainConfig& cfg,
                  std::ostream* step_log = nullptr, int threads = 1);

}  // namespace sasv

#endif  // SASV_TRAINER_HPP_
