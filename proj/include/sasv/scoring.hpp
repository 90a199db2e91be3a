// sasv/scoring.hpp

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

#ifndef SASV_SCORING_HPP_
#define SASV_SCORING_HPP_

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "sasv/dataset.hpp"
#include "sasv/metrics.hpp"
#include "sasv/model.hpp"

namespace sasv {

double cosine_score(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b);

// Fused verification score: cosine between the mean enrollment embedding and
// the test embedding, plus w * (2*p_bonafide - 1). With w = 0 this is the
// pure speaker-verification score.
double sasv_score(const std::vector<Eigen::RowVectorXd>& enroll_embeddings,
                  const Eigen::RowVectorXd& test_embedding, double p_bonafide,
                  double w);

// Embeddings and countermeasure probabilities for a set of utterances,
// computed against a frozen parameter snapshot. Utterances are independent,
// so extra threads change nothing but wall time.
struct EmbeddingTable {
  std::map<std::string, Eigen::RowVectorXd> embedding;
  std::map<std::string, double> p_bonafide;
};

EmbeddingTable embed_utterances(const ModelParams& params, const Dataset& ds,
                                Split split, bool normalize, int threads = 1);

std::vector<ScoredTrial> score_trials(const std::vector<TrialRecord>& trials,
                                      const EmbeddingTable& table,
                                      double fusion_weight);

}  // namespace sasv

#endif  // SASV_SCORING_HPP_
