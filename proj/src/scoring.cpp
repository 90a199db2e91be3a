// src/scoring.cpp

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

#include "sasv/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "sasv/error.hpp"

namespace sasv {

double cosine_score(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  detail::require(a.size() == b.size(), "cosine_score: dimension mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  detail::require(na > 0.0 && nb > 0.0, "cosine_score: zero-norm input");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double sasv_score(const std::vector<Eigen::RowVectorXd>& enroll_embeddings,
                  const Eigen::RowVectorXd& test_embedding, double p_bonafide,
                  double w) {
  detail::require(!enroll_embeddings.empty(), "sasv_score: empty enrollment");
  // the countermeasure softmax can saturate to exactly 0 or 1 in floating
  // point, so the bounds are inclusive
  detail::require(p_bonafide >= 0.0 && p_bonafide <= 1.0,
                  "sasv_score: p_bonafide must lie in [0, 1]");
  detail::require(w >= 0.0, "sasv_score: fusion weight must be >= 0");
  Eigen::RowVectorXd mean =
      Eigen::RowVectorXd::Zero(enroll_embeddings.front().size());
  for (const auto& e : enroll_embeddings) {
    detail::require(e.size() == mean.size(),
                    "sasv_score: enrollment dims differ");
    mean += e;
  }
  mean /= static_cast<double>(enroll_embeddings.size());
  return cosine_score(mean, test_embedding) + w * (2.0 * p_bonafide - 1.0);
}

EmbeddingTable embed_utterances(const ModelParams& params, const Dataset& ds,
                                Split split, bool normalize, int threads) {
  const std::vector<int>& idx = ds.indices_of(split);
  std::vector<Eigen::RowVectorXd> embs(idx.size());
  std::vector<double> probs(idx.size());

  auto work = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const Utterance& u = ds.utterances[static_cast<size_t>(idx[i])];
      embs[i] = encode_value(params, u.asv_features, u.raw_features, normalize);
      probs[i] = cm_probability(params, embs[i]);
    }
  };
  const int n_threads = std::max(1, threads);
  if (n_threads == 1 || idx.size() < 2) {
    work(0, idx.size());
  } else {
    // each trial slot is written by exactly one thread, so the result does
    // not depend on the thread count
    std::vector<std::thread> pool;
    const size_t chunk = (idx.size() + n_threads - 1) / n_threads;
    for (int k = 0; k < n_threads; ++k) {
      const size_t b = std::min(idx.size(), static_cast<size_t>(k) * chunk);
      const size_t e = std::min(idx.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  EmbeddingTable table;
  for (size_t i = 0; i < idx.size(); ++i) {
    const Utterance& u = ds.utterances[static_cast<size_t>(idx[i])];
    table.embedding[u.id] = std::move(embs[i]);
    table.p_bonafide[u.id] = probs[i];
  }
  return table;
}

std::vector<ScoredTrial> score_trials(const std::vector<TrialRecord>& trials,
                                      const EmbeddingTable& table,
                                      double fusion_weight) {
  std::vector<ScoredTrial> scored;
  scored.reserve(trials.size());
  for (const auto& t : trials) {
    std::vector<Eigen::RowVectorXd> enroll;
    enroll.reserve(t.enroll_ids.size());
    for (const auto& id : t.enroll_ids) {
      auto it = table.embedding.find(id);
      detail::require(it != table.embedding.end(),
                      "score_trials: no embedding for enrollment '" + id + "'");
      enroll.push_back(it->second);
    }
    auto te = table.embedding.find(t.test_id);
    detail::require(te != table.embedding.end(),
                    "score_trials: no embedding for test '" + t.test_id + "'");
    const double p = table.p_bonafide.at(t.test_id);
    scored.push_back({t, sasv_score(enroll, te->second, p, fusion_weight)});
  }
  return scored;
}

}  // namespace sasv
