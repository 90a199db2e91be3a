// sasv/metrics.hpp

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

#ifndef SASV_METRICS_HPP_
#define SASV_METRICS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "sasv/dataset.hpp"

namespace sasv {

struct ScoredTrial {
  TrialRecord trial;
  double score = 0.0;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// Equal error rate with linear interpolation at the crossing of the
// false-acceptance and false-rejection curves; a score >= threshold accepts.
EerResult compute_eer(const std::vector<double>& positive_scores,
                      const std::vector<double>& negative_scores);
EerResult compute_eer(const std::vector<ScoredTrial>& trials,
                      TrialLabel positive_label);

// The three verification metrics over one scored trial list: all trials
// (positives = target), the target/nontarget subset, and the target/spoof
// subset, all from the same per-trial score.
struct MetricSuite {
  double sasv_eer = 0.0, sv_eer = 0.0, spf_eer = 0.0;
  double sasv_threshold = 0.0, sv_threshold = 0.0, spf_threshold = 0.0;
};

MetricSuite compute_metric_suite(const std::vector<ScoredTrial>& trials);

// Uncalibrated score-sum fusion of two per-trial score lists; the id columns
// must align exactly.
std::vector<double> score_sum_baseline(
    const std::vector<std::pair<long, double>>& asv_scores,
    const std::vector<std::pair<long, double>>& cm_scores);

std::string metric_suite_to_json(const MetricSuite& suite);
MetricSuite metric_suite_from_json(const std::string& text);

// Score file lines: "trial_index score" with 9 significant digits.
std::string format_scores(const std::vector<double>& scores);
std::vector<std::pair<long, double>> parse_scores_text(const std::string& text,
                                                       const std::string& name);

}  // namespace sasv

#endif  // SASV_METRICS_HPP_
