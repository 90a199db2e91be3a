// tests/test_data.cpp

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <set>

#include "sasv/dataset.hpp"
#include "sasv/error.hpp"
#include "sasv/io_util.hpp"

using namespace sasv;

namespace {

DatasetConfig small_config() {
  DatasetConfig cfg;
  cfg.n_speakers = 4;
  cfg.utts_per_speaker_bonafide = 10;
  cfg.utts_per_attack_per_speaker = 2;
  cfg.asv_dim = 8;
  cfg.raw_dim = 8;
  cfg.seed = 11;
  return cfg;
}

int count_if(const Dataset& ds, Split split, auto pred) {
  int n = 0;
  for (int i : ds.indices_of(split))
    if (pred(ds.utterances[static_cast<size_t>(i)])) ++n;
  return n;
}

// Speaker A has exactly the three enrollment utterances; speaker B has spare
// bonafide tests and one spoof.
Dataset tiny_handmade_dataset() {
  Dataset ds;
  auto add = [&](const std::string& id, int spk, Source src) {
    Utterance u;
    u.id = id;
    u.speaker = spk;
    u.speaker_name = "SPK_" + std::to_string(spk);
    u.source = src;
    u.split = Split::kEval;
    u.asv_features = Eigen::RowVectorXd::Zero(2);
    u.raw_features = Eigen::RowVectorXd::Zero(2);
    ds.utterances.push_back(std::move(u));
  };
  for (int i = 0; i < 3; ++i) add("a" + std::to_string(i), 0, Source::kBonafide);
  for (int i = 0; i < 5; ++i) add("b" + std::to_string(i), 1, Source::kBonafide);
  add("b_spoof", 1, Source::kA05);
  ds.n_train_speakers = 0;
  ds.n_total_speakers = 2;
  ds.rebuild_index();
  return ds;
}

}  // namespace

TEST_CASE("attack families follow the label ranges") {
  CHECK(family_of(Source::kA01) == Family::kTts);
  CHECK(family_of(Source::kA04) == Family::kTts);
  CHECK(family_of(Source::kA05) == Family::kVc);
  CHECK(family_of(Source::kA06) == Family::kVc);
  CHECK(family_of(Source::kBonafide) == Family::kNone);
}

TEST_CASE("generated counts match the config arithmetic") {
  const Dataset ds = generate_dataset(small_config());
  CHECK(count_if(ds, Split::kTrain, [](const Utterance& u) {
          return u.bonafide();
        }) == 40);
  // 4 training attacks x 2 utterances x 4 speakers
  CHECK(count_if(ds, Split::kTrain, [](const Utterance& u) {
          return !u.bonafide();
        }) == 32);
}

TEST_CASE("same seed twice gives bit-identical datasets") {
  const Dataset a = generate_dataset(small_config());
  const Dataset b = generate_dataset(small_config());
  REQUIRE(a.utterances.size() == b.utterances.size());
  for (size_t i = 0; i < a.utterances.size(); ++i) {
    CHECK(a.utterances[i].id == b.utterances[i].id);
    CHECK(a.utterances[i].speaker == b.utterances[i].speaker);
    CHECK(a.utterances[i].source == b.utterances[i].source);
    CHECK((a.utterances[i].asv_features.array() ==
           b.utterances[i].asv_features.array())
              .all());
    CHECK((a.utterances[i].raw_features.array() ==
           b.utterances[i].raw_features.array())
              .all());
  }
}

TEST_CASE("eval speakers are disjoint from train speakers") {
  const Dataset ds = generate_dataset(small_config());
  std::set<std::string> train_spk, eval_spk;
  for (int i : ds.indices_of(Split::kTrain))
    train_spk.insert(ds.utterances[static_cast<size_t>(i)].speaker_name);
  for (int i : ds.indices_of(Split::kEval))
    eval_spk.insert(ds.utterances[static_cast<size_t>(i)].speaker_name);
  for (const auto& s : eval_spk) CHECK(train_spk.count(s) == 0);
}

TEST_CASE("held-out attacks appear only in the eval split") {
  const Dataset ds = generate_dataset(small_config());
  for (Split split : {Split::kTrain, Split::kDev})
    for (Source held : kHeldOutAttacks)
      CHECK(count_if(ds, split, [held](const Utterance& u) {
              return u.source == held;
            }) == 0);
  for (Source held : kHeldOutAttacks)
    CHECK(count_if(ds, Split::kEval, [held](const Utterance& u) {
            return u.source == held;
          }) > 0);
  // both families survive the holdout in training
  CHECK(count_if(ds, Split::kTrain, [](const Utterance& u) {
          return u.family() == Family::kTts;
        }) > 0);
  CHECK(count_if(ds, Split::kTrain, [](const Utterance& u) {
          return u.family() == Family::kVc;
        }) > 0);
}

TEST_CASE("config validation rejects bad settings") {
  DatasetConfig cfg = small_config();
  cfg.n_speakers = 1;
  CHECK_THROWS_AS(generate_dataset(cfg), ContractError);
  cfg = small_config();
  cfg.utts_per_speaker_bonafide = 0;
  CHECK_THROWS_AS(generate_dataset(cfg), ContractError);
}

TEST_CASE("sampled batches satisfy the composition guarantees") {
  const Dataset ds = generate_dataset(small_config());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Batch b = sample_batch(ds, 16, seed);
    CHECK(b.items.size() == 16);
    CHECK(b.has_tts);
    CHECK(b.has_vc);
    CHECK(b.two_bonafide_per_speaker);
    std::map<int, int> bona;
    bool tts = false, vc = false;
    std::set<int> unique(b.items.begin(), b.items.end());
    CHECK(unique.size() == b.items.size());
    for (int i : b.items) {
      const Utterance& u = ds.utterances[static_cast<size_t>(i)];
      CHECK(u.split == Split::kTrain);
      if (u.bonafide()) ++bona[u.speaker];
      tts |= u.family() == Family::kTts;
      vc |= u.family() == Family::kVc;
    }
    CHECK(tts);
    CHECK(vc);
    for (const auto& [spk, n] : bona) CHECK(n >= 2);
  }
}

TEST_CASE("batch sampling is deterministic in the seed") {
  const Dataset ds = generate_dataset(small_config());
  const Batch a = sample_batch(ds, 12, 99);
  const Batch b = sample_batch(ds, 12, 99);
  CHECK(a.items == b.items);
  const Batch c = sample_batch(ds, 12, 100);
  CHECK(a.items != c.items);
}

TEST_CASE("sample_batch rejects undersized requests") {
  const Dataset ds = generate_dataset(small_config());
  CHECK_THROWS_AS(sample_batch(ds, 7, 0), ContractError);
}

TEST_CASE("trials: labels verify, enrollment disjoint, spoofs are spoofs") {
  const Dataset ds = generate_dataset(small_config());
  for (Split split : {Split::kDev, Split::kEval}) {
    const auto trials = build_trials(ds, split, 5);
    verify_trial_labels(ds, trials);  // throws on any inconsistency
    int n_target = 0, n_nontarget = 0, n_spoof = 0;
    for (const auto& t : trials) {
      CHECK(t.enroll_ids.size() == 3);
      for (const auto& e : t.enroll_ids) CHECK(e != t.test_id);
      switch (t.label) {
        case TrialLabel::kTarget: ++n_target; break;
        case TrialLabel::kNontarget: ++n_nontarget; break;
        case TrialLabel::kSpoof:
          ++n_spoof;
          CHECK(!ds.by_id(t.test_id).bonafide());
          break;
      }
    }
    CHECK(n_target > 0);
    CHECK(n_nontarget > 0);
    CHECK(n_spoof > 0);
  }
}

TEST_CASE("requested trial counts are honored exactly") {
  const Dataset ds = generate_dataset(small_config());
  TrialCounts want;
  want.target = 5;
  want.nontarget = 7;
  want.spoof = 3;
  const auto trials = build_trials(ds, Split::kEval, 5, want);
  CHECK(trials.size() == 15);
}

TEST_CASE("a speaker with only enrollment utterances yields no target trials") {
  const Dataset ds = tiny_handmade_dataset();
  const auto trials = build_trials(ds, Split::kEval, 1);
  for (const auto& t : trials) {
    const int claimed = ds.by_id(t.enroll_ids.front()).speaker;
    if (t.label == TrialLabel::kTarget) CHECK(claimed != 0);
  }
}

TEST_CASE("verify_trial_labels catches a flipped label") {
  const Dataset ds = generate_dataset(small_config());
  auto trials = build_trials(ds, Split::kEval, 5);
  REQUIRE(!trials.empty());
  trials.front().label = trials.front().label == TrialLabel::kTarget
                             ? TrialLabel::kNontarget
                             : TrialLabel::kTarget;
  CHECK_THROWS_AS(verify_trial_labels(ds, trials), ContractError);
}

TEST_CASE("dataset save/load round-trips through the directory layout") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "sasv_test_data_rt";
  fs::remove_all(dir);
  const Dataset ds = generate_dataset(small_config());
  save_dataset(ds, dir);
  const Dataset back = load_dataset(dir);

  REQUIRE(back.utterances.size() == ds.utterances.size());
  CHECK(back.n_train_speakers == ds.n_train_speakers);
  for (size_t i = 0; i < ds.utterances.size(); ++i) {
    const Utterance& a = ds.utterances[i];
    const Utterance& b = back.utterances[i];
    CHECK(a.id == b.id);
    CHECK(a.speaker == b.speaker);
    CHECK(a.source == b.source);
    CHECK(a.split == b.split);
    // features are stored as f32
    for (Eigen::Index k = 0; k < a.asv_features.size(); ++k)
      CHECK(b.asv_features(k) ==
            static_cast<double>(static_cast<float>(a.asv_features(k))));
  }

  // a second save of the loaded dataset is byte-identical
  const fs::path dir2 = fs::temp_directory_path() / "sasv_test_data_rt2";
  fs::remove_all(dir2);
  save_dataset(back, dir2);
  for (const char* f : {"manifest.txt", "features_asv.sasf",
                        "features_raw.sasf"})
    CHECK(read_file(dir / f) == read_file(dir2 / f));
  fs::remove_all(dir);
  fs::remove_all(dir2);
}
