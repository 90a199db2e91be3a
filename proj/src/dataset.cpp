// src/dataset.cpp

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

#include "sasv/dataset.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "sasv/error.hpp"
#include "sasv/io_util.hpp"
#include "sasv/protocol.hpp"
#include "sasv/rng.hpp"

namespace sasv {

Family family_of(Source s) {
  switch (s) {
    case Source::kBonafide:
      return Family::kNone;
    case Source::kA01:
    case Source::kA02:
    case Source::kA03:
    case Source::kA04:
      return Family::kTts;
    case Source::kA05:
    case Source::kA06:
      return Family::kVc;
  }
  return Family::kNone;
}

int family_class_of(Source s) {
  switch (s) {
    case Source::kBonafide: return -1;
    case Source::kA01: return 0;
    case Source::kA02: return 1;
    case Source::kA03: return 2;
    case Source::kA04: return 3;
    case Source::kA05: return 0;
    case Source::kA06: return 1;
  }
  return -1;
}

std::string to_string(Source s) {
  switch (s) {
    case Source::kBonafide: return "bonafide";
    case Source::kA01: return "A01";
    case Source::kA02: return "A02";
    case Source::kA03: return "A03";
    case Source::kA04: return "A04";
    case Source::kA05: return "A05";
    case Source::kA06: return "A06";
  }
  return "?";
}

Source source_from_string(const std::string& s) {
  if (s == "bonafide") return Source::kBonafide;
  if (s == "A01") return Source::kA01;
  if (s == "A02") return Source::kA02;
  if (s == "A03") return Source::kA03;
  if (s == "A04") return Source::kA04;
  if (s == "A05") return Source::kA05;
  if (s == "A06") return Source::kA06;
  throw ContractError("unknown source label: '" + s + "'");
}

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kEval: return "eval";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "eval") return Split::kEval;
  throw ContractError("unknown split: '" + s + "'");
}

std::string to_string(TrialLabel l) {
  switch (l) {
    case TrialLabel::kTarget: return "target";
    case TrialLabel::kNontarget: return "nontarget";
    case TrialLabel::kSpoof: return "spoof";
  }
  return "?";
}

TrialLabel trial_label_from_string(const std::string& s) {
  if (s == "target") return TrialLabel::kTarget;
  if (s == "nontarget") return TrialLabel::kNontarget;
  if (s == "spoof") return TrialLabel::kSpoof;
  throw ContractError("unknown trial label: '" + s + "'");
}

void DatasetConfig::validate() const {
  detail::require(n_speakers >= 2, "dataset config: n_speakers must be >= 2");
  detail::require(utts_per_speaker_bonafide >= 1,
                  "dataset config: utts_per_speaker_bonafide must be >= 1");
  detail::require(utts_per_attack_per_speaker >= 1,
                  "dataset config: utts_per_attack_per_speaker must be >= 1");
  detail::require(asv_dim >= 1 && raw_dim >= 1,
                  "dataset config: feature dims must be >= 1");
  detail::require(class_separation >= 0.0,
                  "dataset config: class_separation must be >= 0");
}

const Utterance& Dataset::by_id(const std::string& id) const {
  auto it = id_index_.find(id);
  if (it == id_index_.end())
    throw ContractError("unknown utterance id: '" + id + "'");
  return utterances[static_cast<size_t>(it->second)];
}

void Dataset::rebuild_index() {
  id_index_.clear();
  for (auto& v : split_indices_) v.clear();
  for (size_t i = 0; i < utterances.size(); ++i) {
    id_index_[utterances[i].id] = static_cast<int>(i);
    split_indices_[static_cast<int>(utterances[i].split)].push_back(
        static_cast<int>(i));
  }
}

namespace {

Eigen::RowVectorXd gaussian_row(Rng& rng, int n, double scale) {
  Eigen::RowVectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * rng.gaussian();
  return v;
}

bool is_held_out(Source s) {
  for (Source h : kHeldOutAttacks)
    if (h == s) return true;
  return false;
}

std::string make_utt_id(Split split, int counter) {
  const char* tag = split == Split::kTrain ? "T" : split == Split::kDev ? "D" : "E";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "S_%s_%06d", tag, counter);
  return buf;
}

std::string make_speaker_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "SPK_%04d", index);
  return buf;
}

}  // namespace

Dataset generate_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.config = cfg;
  ds.n_train_speakers = cfg.n_speakers;
  ds.n_total_speakers = 2 * cfg.n_speakers;

  Rng rng(cfg.seed);
  const double sep = cfg.class_separation;

  // Family centers live in raw-feature space; per-attack offsets put A01-A04
  // nearer each other than either is to A05/A06. Attacks leak only weakly
  // into the asv branch, speaker identity shifts both branches.
  const Eigen::RowVectorXd tts_center = gaussian_row(rng, cfg.raw_dim, sep);
  const Eigen::RowVectorXd vc_center = gaussian_row(rng, cfg.raw_dim, sep);
  std::vector<Eigen::RowVectorXd> attack_raw(kNumAttacks), attack_asv(kNumAttacks);
  for (int a = 0; a < kNumAttacks; ++a) {
    const Eigen::RowVectorXd& fam = a < kNumTtsAttacks ? tts_center : vc_center;
    attack_raw[a] = fam + gaussian_row(rng, cfg.raw_dim, 0.45 * sep);
    attack_asv[a] = gaussian_row(rng, cfg.asv_dim, 0.2 * sep);
  }

  std::vector<Eigen::RowVectorXd> spk_asv(ds.n_total_speakers),
      spk_raw(ds.n_total_speakers);
  for (int s = 0; s < ds.n_total_speakers; ++s) {
    spk_asv[s] = gaussian_row(rng, cfg.asv_dim, sep);
    spk_raw[s] = gaussian_row(rng, cfg.raw_dim, 0.5 * sep);
  }

  int counters[3] = {0, 0, 0};
  auto add_utt = [&](Split split, int spk, Source src) {
    Utterance u;
    u.id = make_utt_id(split, counters[static_cast<int>(split)]++);
    u.speaker = spk;
    u.speaker_name = make_speaker_name(spk);
    u.source = src;
    u.split = split;
    u.asv_features = spk_asv[spk] + gaussian_row(rng, cfg.asv_dim, 1.0);
    u.raw_features = spk_raw[spk] + gaussian_row(rng, cfg.raw_dim, 1.0);
    if (src != Source::kBonafide) {
      const int a = static_cast<int>(src) - 1;
      u.asv_features += attack_asv[a];
      u.raw_features += attack_raw[a];
    }
    ds.utterances.push_back(std::move(u));
  };

  std::vector<Source> train_attacks;
  for (int a = 1; a <= kNumAttacks; ++a) {
    const Source s = static_cast<Source>(a);
    if (!is_held_out(s)) train_attacks.push_back(s);
  }
  std::vector<Source> all_attacks;
  for (int a = 1; a <= kNumAttacks; ++a)
    all_attacks.push_back(static_cast<Source>(a));

  const int dev_bona = std::max(4, cfg.utts_per_speaker_bonafide / 4);
  const int dev_attack = std::max(1, cfg.utts_per_attack_per_speaker / 2);

  for (int spk = 0; spk < cfg.n_speakers; ++spk) {
    for (int i = 0; i < cfg.utts_per_speaker_bonafide; ++i)
      add_utt(Split::kTrain, spk, Source::kBonafide);
    for (Source a : train_attacks)
      for (int i = 0; i < cfg.utts_per_attack_per_speaker; ++i)
        add_utt(Split::kTrain, spk, a);
  }
  for (int spk = 0; spk < cfg.n_speakers; ++spk) {
    for (int i = 0; i < dev_bona; ++i)
      add_utt(Split::kDev, spk, Source::kBonafide);
    for (Source a : train_attacks)
      for (int i = 0; i < dev_attack; ++i) add_utt(Split::kDev, spk, a);
  }
  for (int spk = cfg.n_speakers; spk < ds.n_total_speakers; ++spk) {
    for (int i = 0; i < cfg.utts_per_speaker_bonafide; ++i)
      add_utt(Split::kEval, spk, Source::kBonafide);
    for (Source a : all_attacks)
      for (int i = 0; i < cfg.utts_per_attack_per_speaker; ++i)
        add_utt(Split::kEval, spk, a);
  }

  ds.rebuild_index();
  return ds;
}

Batch sample_batch(const Dataset& ds, int batch_size, std::uint64_t seed) {
  detail::require(batch_size >= 8, "sample_batch: batch_size must be >= 8");

  const auto& train = ds.indices_of(Split::kTrain);
  std::map<int, std::vector<int>> bona_by_speaker;
  std::vector<int> tts, vc;
  for (int idx : train) {
    const Utterance& u = ds.utterances[static_cast<size_t>(idx)];
    if (u.bonafide())
      bona_by_speaker[u.speaker].push_back(idx);
    else if (u.family() == Family::kTts)
      tts.push_back(idx);
    else
      vc.push_back(idx);
  }
  std::vector<int> anchor_speakers;
  for (const auto& [spk, utts] : bona_by_speaker)
    if (utts.size() >= 2) anchor_speakers.push_back(spk);

  detail::require(anchor_speakers.size() >= 2,
                  "sample_batch: need >= 2 speakers with >= 2 bonafide "
                  "training utterances");
  detail::require(!tts.empty(), "sample_batch: dataset has no TTS attacks");
  detail::require(!vc.empty(), "sample_batch: dataset has no VC attacks");

  Rng rng(seed);
  const int n_anchors = std::clamp(batch_size / 4, 2,
                                   static_cast<int>(anchor_speakers.size()));
  rng.shuffle(anchor_speakers);
  anchor_speakers.resize(static_cast<size_t>(n_anchors));

  Batch batch;
  std::set<int> used;
  auto take = [&](int idx) {
    batch.items.push_back(idx);
    used.insert(idx);
  };

  for (int spk : anchor_speakers) {
    std::vector<int> pool = bona_by_speaker[spk];
    rng.shuffle(pool);
    take(pool[0]);
    take(pool[1]);
  }
  take(tts[rng.uniform_index(tts.size())]);
  int v;
  do {
    v = vc[rng.uniform_index(vc.size())];
  } while (used.count(v));
  take(v);

  // Fill with spoofed speech from anyone or more bonafide speech from anchor
  // speakers; bonafide from a non-anchor speaker would break the >=2 rule.
  std::vector<int> fill_pool;
  for (int idx : tts)
    if (!used.count(idx)) fill_pool.push_back(idx);
  for (int idx : vc)
    if (!used.count(idx)) fill_pool.push_back(idx);
  for (int spk : anchor_speakers)
    for (int idx : bona_by_speaker[spk])
      if (!used.count(idx)) fill_pool.push_back(idx);
  std::sort(fill_pool.begin(), fill_pool.end());
  rng.shuffle(fill_pool);

  detail::require(
      static_cast<int>(batch.items.size() + fill_pool.size()) >= batch_size,
      "sample_batch: dataset too small for requested batch size");
  for (size_t i = 0; batch.items.size() < static_cast<size_t>(batch_size); ++i)
    take(fill_pool[i]);

  // Recompute the composition flags from the actual contents.
  std::map<int, int> bona_count;
  for (int idx : batch.items) {
    const Utterance& u = ds.utterances[static_cast<size_t>(idx)];
    if (u.bonafide()) ++bona_count[u.speaker];
    if (u.family() == Family::kTts) batch.has_tts = true;
    if (u.family() == Family::kVc) batch.has_vc = true;
  }
  batch.two_bonafide_per_speaker =
      !bona_count.empty() &&
      std::all_of(bona_count.begin(), bona_count.end(),
                  [](const auto& kv) { return kv.second >= 2; });
  return batch;
}

std::vector<TrialRecord> build_trials(const Dataset& ds, Split split,
                                      std::uint64_t seed,
                                      const TrialCounts& counts) {
  constexpr int kEnrollSize = 3;
  constexpr int kNontargetTestsPerPair = 2;

  const auto& idx = ds.indices_of(split);
  detail::require(!idx.empty(),
                  "build_trials: split '" + to_string(split) + "' is empty");

  std::map<int, std::vector<int>> bona_by_speaker, spoof_by_speaker;
  for (int i : idx) {
    const Utterance& u = ds.utterances[static_cast<size_t>(i)];
    (u.bonafide() ? bona_by_speaker : spoof_by_speaker)[u.speaker].push_back(i);
  }

  // The first kEnrollSize bonafide utterances of each speaker enroll that
  // speaker; everything after is test material.
  std::map<int, std::vector<std::string>> enroll;
  std::map<int, std::vector<int>> tests;
  for (const auto& [spk, utts] : bona_by_speaker) {
    if (utts.size() < kEnrollSize) continue;
    auto& e = enroll[spk];
    for (int k = 0; k < kEnrollSize; ++k)
      e.push_back(ds.utterances[static_cast<size_t>(utts[static_cast<size_t>(k)])].id);
    for (size_t k = kEnrollSize; k < utts.size(); ++k)
      tests[spk].push_back(utts[k]);
  }
  detail::require(!enroll.empty(),
                  "build_trials: no speaker has enough bonafide utterances "
                  "to enroll");

  Rng rng(seed);
  std::vector<TrialRecord> targets, nontargets, spoofs;
  for (const auto& [spk, e] : enroll) {
    for (int t : tests[spk])
      targets.push_back({e, ds.utterances[static_cast<size_t>(t)].id,
                         TrialLabel::kTarget});
    for (const auto& [other, other_tests] : tests) {
      if (other == spk || other_tests.empty()) continue;
      std::vector<int> pool = other_tests;
      rng.shuffle(pool);
      const size_t n = std::min<size_t>(kNontargetTestsPerPair, pool.size());
      for (size_t k = 0; k < n; ++k)
        nontargets.push_back({e, ds.utterances[static_cast<size_t>(pool[k])].id,
                              TrialLabel::kNontarget});
    }
    auto it = spoof_by_speaker.find(spk);
    if (it != spoof_by_speaker.end())
      for (int s : it->second)
        spoofs.push_back({e, ds.utterances[static_cast<size_t>(s)].id,
                          TrialLabel::kSpoof});
  }

  auto cap = [&rng](std::vector<TrialRecord>& v, long want) {
    if (want < 0 || want >= static_cast<long>(v.size())) return;
    rng.shuffle(v);
    v.resize(static_cast<size_t>(want));
  };
  cap(targets, counts.target);
  cap(nontargets, counts.nontarget);
  cap(spoofs, counts.spoof);

  std::vector<TrialRecord> out;
  out.reserve(targets.size() + nontargets.size() + spoofs.size());
  for (auto* v : {&targets, &nontargets, &spoofs})
    out.insert(out.end(), v->begin(), v->end());
  verify_trial_labels(ds, out);
  return out;
}

void verify_trial_labels(const Dataset& ds,
                         const std::vector<TrialRecord>& trials) {
  for (size_t i = 0; i < trials.size(); ++i) {
    const TrialRecord& t = trials[i];
    const std::string at = " (trial " + std::to_string(i) + ")";
    detail::require(!t.enroll_ids.empty(), "trial has no enrollment" + at);
    const int claimed = ds.by_id(t.enroll_ids.front()).speaker;
    for (const auto& e : t.enroll_ids) {
      const Utterance& u = ds.by_id(e);
      detail::require(u.bonafide(), "enrollment must be bonafide" + at);
      detail::require(u.speaker == claimed,
                      "enrollment spans multiple speakers" + at);
      detail::require(e != t.test_id,
                      "test utterance reused in enrollment" + at);
    }
    const Utterance& test = ds.by_id(t.test_id);
    const TrialLabel truth =
        !test.bonafide() ? TrialLabel::kSpoof
        : test.speaker == claimed ? TrialLabel::kTarget
                                  : TrialLabel::kNontarget;
    detail::require(truth == t.label,
                    "stored label '" + to_string(t.label) +
                        "' disagrees with ground truth '" + to_string(truth) +
                        "'" + at);
  }
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "manifest.txt", format_manifest(ds));

  std::vector<Eigen::RowVectorXd> asv, raw;
  asv.reserve(ds.utterances.size());
  raw.reserve(ds.utterances.size());
  for (const auto& u : ds.utterances) {
    asv.push_back(u.asv_features);
    raw.push_back(u.raw_features);
  }
  write_feature_file(dir / "features_asv.sasf", asv);
  write_feature_file(dir / "features_raw.sasf", raw);

  for (Split split : {Split::kTrain, Split::kDev, Split::kEval}) {
    std::vector<ProtocolRecord> records;
    for (int i : ds.indices_of(split)) {
      const Utterance& u = ds.utterances[static_cast<size_t>(i)];
      records.push_back({u.speaker_name, u.id,
                         u.bonafide() ? "" : to_string(u.source),
                         u.bonafide()});
    }
    write_file_atomic(dir / ("protocol_" + to_string(split) + ".txt"),
                      format_protocol(records));
  }
  for (Split split : {Split::kDev, Split::kEval}) {
    const auto trials = build_trials(ds, split, ds.config.seed);
    write_file_atomic(dir / ("trials_" + to_string(split) + ".txt"),
                      format_trials(trials));
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const std::string manifest = read_file(dir / "manifest.txt");
  Dataset ds;

  std::istringstream in(manifest);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Utterance u;
    std::string source, split;
    if (!(ls >> u.id >> u.speaker_name >> source >> split))
      throw IoError("manifest line " + std::to_string(line_no) +
                    ": expected 'id speaker source split'");
    u.source = source_from_string(source);
    u.split = split_from_string(split);
    ds.utterances.push_back(std::move(u));
  }

  // Training speakers take the low indices, in name order; everyone else
  // follows. load(save(ds)) then reproduces the generator's numbering.
  std::set<std::string> train_names, other_names;
  for (const auto& u : ds.utterances)
    (u.split == Split::kTrain ? train_names : other_names).insert(u.speaker_name);
  for (const auto& n : train_names) other_names.erase(n);
  std::map<std::string, int> speaker_index;
  int next = 0;
  for (const auto& n : train_names) speaker_index[n] = next++;
  ds.n_train_speakers = next;
  for (const auto& n : other_names) speaker_index[n] = next++;
  ds.n_total_speakers = next;
  for (auto& u : ds.utterances) u.speaker = speaker_index[u.speaker_name];

  const auto asv = read_feature_file(dir / "features_asv.sasf",
                                     ds.utterances.size());
  const auto raw = read_feature_file(dir / "features_raw.sasf",
                                     ds.utterances.size());
  for (size_t i = 0; i < ds.utterances.size(); ++i) {
    ds.utterances[i].asv_features = asv[i];
    ds.utterances[i].raw_features = raw[i];
  }
  ds.rebuild_index();
  return ds;
}

}  // namespace sasv
