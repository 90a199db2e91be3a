// sasv/dataset.hpp

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

#ifndef SASV_DATASET_HPP_
#define SASV_DATASET_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace sasv {

// Spoof generation source of an utterance. A01-A04 form the TTS family,
// A05 and A06 the VC family.
enum class Source : int {
  kBonafide = 0,
  kA01,
  kA02,
  kA03,
  kA04,
  kA05,
  kA06
};

enum class Family : int { kNone = 0, kTts, kVc };

inline constexpr int kNumAttacks = 6;
inline constexpr int kNumTtsAttacks = 4;
inline constexpr int kNumVcAttacks = 2;

Family family_of(Source s);
// 0..3 for A01..A04, 0..1 for A05..A06; -1 for bonafide.
int family_class_of(Source s);
std::string to_string(Source s);
Source source_from_string(const std::string& s);

enum class Split : int { kTrain = 0, kDev, kEval };
std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct Utterance {
  std::string id;
  std::string speaker_name;
  int speaker = -1;  // dataset-wide index; training speakers come first
  Source source = Source::kBonafide;
  Split split = Split::kTrain;
  Eigen::RowVectorXd asv_features;
  Eigen::RowVectorXd raw_features;

  bool bonafide() const { return source == Source::kBonafide; }
  Family family() const { return family_of(source); }
};

struct DatasetConfig {
  int n_speakers = 8;  // per split: train and eval each get this many
  int utts_per_speaker_bonafide = 20;
  int utts_per_attack_per_speaker = 4;
  int asv_dim = 32;
  int raw_dim = 32;
  std::uint64_t seed = 1234;
  // Scale of class centers relative to unit observation noise; larger means
  // more separable speakers and attack families.
  double class_separation = 3.0;

  void validate() const;
};

// Synthetic corpus shaped like a logical-access anti-spoofing protocol:
// train/dev share speakers and the four training attacks, eval has unseen
// speakers and additionally the two held-out attacks (A03, A04).
struct Dataset {
  DatasetConfig config;
  std::vector<Utterance> utterances;
  int n_train_speakers = 0;
  int n_total_speakers = 0;

  const std::vector<int>& indices_of(Split s) const {
    return split_indices_[static_cast<int>(s)];
  }
  const Utterance& by_id(const std::string& id) const;
  bool has_id(const std::string& id) const { return id_index_.count(id) > 0; }
  void rebuild_index();

 private:
  std::vector<int> split_indices_[3];
  std::map<std::string, int> id_index_;
};

// Attacks never present in the train/dev splits of a generated dataset.
inline constexpr Source kHeldOutAttacks[2] = {Source::kA03, Source::kA04};

Dataset generate_dataset(const DatasetConfig& cfg);

// Training batch with the composition the spoof-source triplet loss needs.
struct Batch {
  std::vector<int> items;  // indices into dataset.utterances
  bool has_tts = false;
  bool has_vc = false;
  bool two_bonafide_per_speaker = false;  // among speakers with any bonafide
};

// Draws a deterministic batch from the train split: at least two bonafide
// utterances for every speaker that contributes bonafide speech, at least one
// TTS and one VC sample.
Batch sample_batch(const Dataset& ds, int batch_size, std::uint64_t seed);

enum class TrialLabel : int { kTarget = 0, kNontarget, kSpoof };
std::string to_string(TrialLabel l);
TrialLabel trial_label_from_string(const std::string& s);

struct TrialRecord {
  std::vector<std::string> enroll_ids;
  std::string test_id;
  TrialLabel label = TrialLabel::kTarget;

  bool operator==(const TrialRecord&) const = default;
};

// Requested trial counts; -1 keeps everything available.
struct TrialCounts {
  long target = -1;
  long nontarget = -1;
  long spoof = -1;
};

// Builds verification trials for one split. Per claimed speaker the first
// three bonafide utterances are enrollment-only and never appear as tests.
std::vector<TrialRecord> build_trials(const Dataset& ds, Split split,
                                      std::uint64_t seed,
                                      const TrialCounts& counts = {});

// Recomputes every trial label from ground truth; throws if any stored label
// disagrees.
void verify_trial_labels(const Dataset& ds,
                         const std::vector<TrialRecord>& trials);

// On-disk layout: manifest plus one feature file per encoder branch.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace sasv

#endif  // SASV_DATASET_HPP_
