// src/metrics.cpp

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

#include "sasv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sasv/error.hpp"

namespace sasv {

/*
  EER convention. Sweep the decision threshold t downward through the distinct
  scores (a score >= t accepts), starting from a sentinel above the maximum:

    FAR(t) = #negatives >= t / #negatives     (0 -> 1, non-decreasing)
    FRR(t) = #positives <  t / #positives     (1 -> 0, non-increasing)

  so FAR - FRR is non-decreasing along the sweep and crosses zero exactly
  once. If a vertex lands on the crossing, its FAR is the EER; otherwise the
  EER and operating threshold are linearly interpolated between the two
  adjacent vertices. The vertices depend on the score ordering only, which
  makes the EER invariant under strictly increasing score transforms.
*/
EerResult compute_eer(const std::vector<double>& positive_scores,
                      const std::vector<double>& negative_scores) {
  detail::require(!positive_scores.empty() && !negative_scores.empty(),
                  "compute_eer: need at least one positive and one negative "
                  "trial");
  for (double s : positive_scores)
    detail::require(std::isfinite(s), "compute_eer: non-finite score");
  for (double s : negative_scores)
    detail::require(std::isfinite(s), "compute_eer: non-finite score");

  std::vector<double> pos = positive_scores;  // ascending
  std::vector<double> neg = negative_scores;  // ascending
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  std::vector<double> thresholds;
  {
    std::vector<double> all;
    all.reserve(pos.size() + neg.size());
    all.insert(all.end(), pos.begin(), pos.end());
    all.insert(all.end(), neg.begin(), neg.end());
    std::sort(all.begin(), all.end(), std::greater<double>());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    thresholds.reserve(all.size() + 1);
    thresholds.push_back(all.front() + 1.0);  // accepts nothing
    thresholds.insert(thresholds.end(), all.begin(), all.end());
  }

  const double n_pos = static_cast<double>(pos.size());
  const double n_neg = static_cast<double>(neg.size());
  auto far_at = [&](double t) {
    const auto it = std::lower_bound(neg.begin(), neg.end(), t);
    return static_cast<double>(neg.end() - it) / n_neg;
  };
  auto frr_at = [&](double t) {
    const auto it = std::lower_bound(pos.begin(), pos.end(), t);
    return static_cast<double>(it - pos.begin()) / n_pos;
  };

  double prev_t = thresholds.front();
  double prev_far = far_at(prev_t);
  double prev_frr = frr_at(prev_t);
  if (prev_far == prev_frr) return {prev_far, prev_t};
  for (size_t i = 1; i < thresholds.size(); ++i) {
    const double t = thresholds[i];
    const double far = far_at(t);
    const double frr = frr_at(t);
    if (far == frr) return {far, t};
    if (far > frr) {
      // crossing lies strictly inside (prev, current)
      const double denom = (far - prev_far) - (frr - prev_frr);
      const double alpha = (prev_frr - prev_far) / denom;
      return {prev_far + alpha * (far - prev_far),
              prev_t + alpha * (t - prev_t)};
    }
    prev_t = t;
    prev_far = far;
    prev_frr = frr;
  }
  // FAR reaches 1 and FRR reaches 0 at the lowest threshold, so the sweep
  // cannot end without a crossing.
  throw NumericError("compute_eer: no crossing found");
}

EerResult compute_eer(const std::vector<ScoredTrial>& trials,
                      TrialLabel positive_label) {
  std::vector<double> pos, neg;
  for (const auto& st : trials)
    (st.trial.label == positive_label ? pos : neg).push_back(st.score);
  return compute_eer(pos, neg);
}

MetricSuite compute_metric_suite(const std::vector<ScoredTrial>& trials) {
  std::vector<double> target, nontarget, spoof;
  for (const auto& st : trials) {
    switch (st.trial.label) {
      case TrialLabel::kTarget: target.push_back(st.score); break;
      case TrialLabel::kNontarget: nontarget.push_back(st.score); break;
      case TrialLabel::kSpoof: spoof.push_back(st.score); break;
    }
  }
  detail::require(!target.empty(), "metric suite: target subset is empty");
  detail::require(!nontarget.empty(),
                  "metric suite: nontarget subset is empty");
  detail::require(!spoof.empty(), "metric suite: spoof subset is empty");

  std::vector<double> all_neg = nontarget;
  all_neg.insert(all_neg.end(), spoof.begin(), spoof.end());

  MetricSuite suite;
  const EerResult sasv = compute_eer(target, all_neg);
  const EerResult sv = compute_eer(target, nontarget);
  const EerResult spf = compute_eer(target, spoof);
  suite.sasv_eer = sasv.eer;
  suite.sasv_threshold = sasv.threshold;
  suite.sv_eer = sv.eer;
  suite.sv_threshold = sv.threshold;
  suite.spf_eer = spf.eer;
  suite.spf_threshold = spf.threshold;
  return suite;
}

std::vector<double> score_sum_baseline(
    const std::vector<std::pair<long, double>>& asv_scores,
    const std::vector<std::pair<long, double>>& cm_scores) {
  detail::require(asv_scores.size() == cm_scores.size(),
                  "score_sum_baseline: score lists differ in length");
  std::vector<double> fused;
  fused.reserve(asv_scores.size());
  for (size_t i = 0; i < asv_scores.size(); ++i) {
    if (asv_scores[i].first != cm_scores[i].first)
      throw ContractError("score_sum_baseline: trial id mismatch at position " +
                          std::to_string(i));
    fused.push_back(asv_scores[i].second + cm_scores[i].second);
  }
  return fused;
}

std::string metric_suite_to_json(const MetricSuite& s) {
  nlohmann::json j;
  j["sasv_eer"] = s.sasv_eer;
  j["sv_eer"] = s.sv_eer;
  j["spf_eer"] = s.spf_eer;
  j["sasv_threshold"] = s.sasv_threshold;
  j["sv_threshold"] = s.sv_threshold;
  j["spf_threshold"] = s.spf_threshold;
  return j.dump(2) + "\n";
}

MetricSuite metric_suite_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("metrics json: ") + e.what());
  }
  MetricSuite s;
  try {
    s.sasv_eer = j.at("sasv_eer").get<double>();
    s.sv_eer = j.at("sv_eer").get<double>();
    s.spf_eer = j.at("spf_eer").get<double>();
    s.sasv_threshold = j.at("sasv_threshold").get<double>();
    s.sv_threshold = j.at("sv_threshold").get<double>();
    s.spf_threshold = j.at("spf_threshold").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("metrics json: ") + e.what());
  }
  return s;
}

std::string format_scores(const std::vector<double>& scores) {
  std::string out;
  char buf[64];
  for (size_t i = 0; i < scores.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu %.9g\n", i, scores[i]);
    out += buf;
  }
  return out;
}

std::vector<std::pair<long, double>> parse_scores_text(
    const std::string& text, const std::string& name) {
  std::vector<std::pair<long, double>> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    long idx;
    double score;
    std::string extra;
    if (!(ls >> idx >> score) || (ls >> extra))
      throw IoError(name + " line " + std::to_string(line_no) +
                    ": expected 'trial_index score'");
    out.emplace_back(idx, score);
  }
  return out;
}

}  // namespace sasv
