// src/pipeline.cpp

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

#include "sasv/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "sasv/checkpoint.hpp"
#include "sasv/clustering.hpp"
#include "sasv/io_util.hpp"
#include "sasv/metrics.hpp"
#include "sasv/projection.hpp"
#include "sasv/protocol.hpp"
#include "sasv/report.hpp"
#include "sasv/scoring.hpp"

namespace sasv {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void config_error(const std::string& name, int line_no,
                               const std::string& what) {
  throw ContractError(name + " line " + std::to_string(line_no) + ": " + what);
}

long to_long(const std::string& v, const std::string& name, int line_no) {
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    config_error(name, line_no, "expected an integer, got '" + v + "'");
  }
}

double to_double(const std::string& v, const std::string& name, int line_no) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    config_error(name, line_no, "expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& v, const std::string& name, int line_no) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  config_error(name, line_no, "expected true/false, got '" + v + "'");
}

std::uint64_t to_u64(const std::string& v, const std::string& name,
                     int line_no) {
  try {
    size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    config_error(name, line_no, "expected an unsigned integer, got '" + v + "'");
  }
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text,
                                const std::string& name) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      config_error(name, line_no, "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      config_error(name, line_no, "empty key or value");

    auto as_int = [&] { return static_cast<int>(to_long(value, name, line_no)); };
    auto as_dbl = [&] { return to_double(value, name, line_no); };

    if (key == "n_speakers") cfg.dataset.n_speakers = as_int();
    else if (key == "utts_per_speaker_bonafide")
      cfg.dataset.utts_per_speaker_bonafide = as_int();
    else if (key == "utts_per_attack_per_speaker")
      cfg.dataset.utts_per_attack_per_speaker = as_int();
    else if (key == "asv_dim") cfg.dataset.asv_dim = as_int();
    else if (key == "raw_dim") cfg.dataset.raw_dim = as_int();
    else if (key == "class_separation") cfg.dataset.class_separation = as_dbl();
    else if (key == "seed") {
      const std::uint64_t s = to_u64(value, name, line_no);
      cfg.dataset.seed = s;
      cfg.train.seed = s;
    } else if (key == "epochs") cfg.train.epochs = as_int();
    else if (key == "batch_size") cfg.train.batch_size = as_int();
    else if (key == "learning_rate") cfg.train.learning_rate = as_dbl();
    else if (key == "beta1") cfg.train.beta1 = as_dbl();
    else if (key == "beta2") cfg.train.beta2 = as_dbl();
    else if (key == "epsilon") cfg.train.epsilon = as_dbl();
    else if (key == "lambda1") cfg.train.weights.asv = as_dbl();
    else if (key == "lambda2") cfg.train.weights.tts = as_dbl();
    else if (key == "lambda3") cfg.train.weights.vc = as_dbl();
    else if (key == "lambda4") cfg.train.weights.st = as_dbl();
    else if (key == "margin") cfg.train.margin = as_dbl();
    else if (key == "grl_lambda") cfg.train.grl_lambda = as_dbl();
    else if (key == "grl_ramp") cfg.train.grl_ramp = to_bool(value, name, line_no);
    else if (key == "normalize_embeddings")
      cfg.train.normalize_embeddings = to_bool(value, name, line_no);
    else if (key == "aam_scale") cfg.train.aam_scale = as_dbl();
    else if (key == "aam_margin") cfg.train.aam_margin = as_dbl();
    else if (key == "fusion_weight") cfg.train.fusion_weight = as_dbl();
    else if (key == "embed_dim") cfg.train.embed_dim = as_int();
    else if (key == "asv_proj_dim") cfg.train.asv_proj_dim = as_int();
    else if (key == "raw_hidden_dim") cfg.train.raw_hidden_dim = as_int();
    else if (key == "raw_proj_dim") cfg.train.raw_proj_dim = as_int();
    else config_error(name, line_no, "unknown key '" + key + "'");
  }
  cfg.dataset.validate();
  cfg.train.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config_text(read_file(path), path.filename().string());
}

void apply_seed_override(RunConfig& cfg) {
  const char* env = std::getenv("SASV_SEED");
  if (!env || !*env) return;
  const std::uint64_t s = to_u64(env, "SASV_SEED", 1);
  cfg.dataset.seed = s;
  cfg.train.seed = s;
}

void cmd_gen_data(const std::filesystem::path& config_path,
                  const std::filesystem::path& out_dir) {
  RunConfig cfg = load_run_config(config_path);
  apply_seed_override(cfg);
  const Dataset ds = generate_dataset(cfg.dataset);
  save_dataset(ds, out_dir);
}

void cmd_train(const std::filesystem::path& config_path,
               const std::filesystem::path& data_dir,
               const std::filesystem::path& out_checkpoint, int threads) {
  RunConfig cfg = load_run_config(config_path);
  apply_seed_override(cfg);
  const Dataset ds = load_dataset(data_dir);

  std::ostringstream log;
  const TrainResult result = train(ds, cfg.train, &log, threads);
  save_checkpoint(result.params, out_checkpoint);
  write_file_atomic(out_checkpoint.string() + ".log", log.str());

  if (!result.history.dev_metrics.empty()) {
    const MetricSuite& last = result.history.dev_metrics.back();
    std::printf("trained %zu steps; final dev sasv_eer=%.4f sv_eer=%.4f "
                "spf_eer=%.4f\n",
                result.history.steps.size(), last.sasv_eer, last.sv_eer,
                last.spf_eer);
  }
}

namespace {

EmbeddingTable embed_whole_dataset(const ModelParams& params, const Dataset& ds,
                                   bool normalize) {
  EmbeddingTable all;
  for (Split split : {Split::kTrain, Split::kDev, Split::kEval}) {
    if (ds.indices_of(split).empty()) continue;
    EmbeddingTable t = embed_utterances(params, ds, split, normalize);
    all.embedding.merge(t.embedding);
    all.p_bonafide.merge(t.p_bonafide);
  }
  return all;
}

void check_dims_against_data(const ModelParams& params, const Dataset& ds) {
  if (ds.utterances.empty()) throw ContractError("dataset is empty");
  const auto& u = ds.utterances.front();
  if (u.asv_features.size() != params.dims.asv_dim ||
      u.raw_features.size() != params.dims.raw_dim)
    throw ContractError(
        "checkpoint feature dimensions (" +
        std::to_string(params.dims.asv_dim) + ", " +
        std::to_string(params.dims.raw_dim) +
        ") do not match the data dimensions (" +
        std::to_string(u.asv_features.size()) + ", " +
        std::to_string(u.raw_features.size()) + ")");
}

std::string csv_escape(const std::string& s) { return s; }  // ids are plain

}  // namespace

void cmd_eval(const std::filesystem::path& checkpoint_path,
              const std::filesystem::path& data_dir,
              const std::filesystem::path& trials_path,
              const std::filesystem::path& out_metrics, double fusion_weight,
              const std::filesystem::path& scores_out) {
  const ModelParams params = load_checkpoint(checkpoint_path);
  const Dataset ds = load_dataset(data_dir);
  check_dims_against_data(params, ds);
  const auto trials = parse_trials(trials_path);
  detail::require(!trials.empty(), "eval: empty trial list");

  const EmbeddingTable table = embed_whole_dataset(params, ds, true);
  const auto scored = score_trials(trials, table, fusion_weight);
  const MetricSuite suite = compute_metric_suite(scored);
  write_file_atomic(out_metrics, metric_suite_to_json(suite));
  if (!scores_out.empty()) {
    std::vector<double> scores;
    scores.reserve(scored.size());
    for (const auto& st : scored) scores.push_back(st.score);
    write_file_atomic(scores_out, format_scores(scores));
  }
  std::printf("sasv_eer=%.4f sv_eer=%.4f spf_eer=%.4f\n", suite.sasv_eer,
              suite.sv_eer, suite.spf_eer);
}

void cmd_cluster(const std::filesystem::path& checkpoint_path,
                 const std::filesystem::path& data_dir, int k,
                 const std::filesystem::path& out_csv) {
  const ModelParams params = load_checkpoint(checkpoint_path);
  const Dataset ds = load_dataset(data_dir);
  check_dims_against_data(params, ds);
  const auto& idx = ds.indices_of(Split::kEval);
  detail::require(!idx.empty(), "cluster: eval split is empty");

  Eigen::MatrixXd points(static_cast<Eigen::Index>(idx.size()),
                         params.dims.embed_dim);
  for (size_t i = 0; i < idx.size(); ++i) {
    const Utterance& u = ds.utterances[static_cast<size_t>(idx[i])];
    points.row(static_cast<Eigen::Index>(i)) =
        encode_value(params, u.asv_features, u.raw_features, true);
  }
  const std::vector<int> assignment = agglomerative_cluster(points, k);

  std::string csv = "id,speaker,source,cluster\n";
  for (size_t i = 0; i < idx.size(); ++i) {
    const Utterance& u = ds.utterances[static_cast<size_t>(idx[i])];
    csv += csv_escape(u.id) + "," + u.speaker_name + "," + to_string(u.source) +
           "," + std::to_string(assignment[i]) + "\n";
  }
  write_file_atomic(out_csv, csv);
}

void cmd_project(const std::filesystem::path& checkpoint_path,
                 const std::filesystem::path& data_dir,
                 const std::filesystem::path& out_csv) {
  const ModelParams params = load_checkpoint(checkpoint_path);
  const Dataset ds = load_dataset(data_dir);
  check_dims_against_data(params, ds);
  const auto& idx = ds.indices_of(Split::kEval);
  detail::require(idx.size() >= 3, "project: need at least 3 eval utterances");

  Eigen::MatrixXd points(static_cast<Eigen::Index>(idx.size()),
                         params.dims.embed_dim);
  for (size_t i = 0; i < idx.size(); ++i) {
    const Utterance& u = ds.utterances[static_cast<size_t>(idx[i])];
    points.row(static_cast<Eigen::Index>(i)) =
        encode_value(params, u.asv_features, u.raw_features, true);
  }
  const Projection2d proj = project_2d(points);

  std::string csv = "id,speaker,source,x,y\n";
  char buf[96];
  for (size_t i = 0; i < idx.size(); ++i) {
    const Utterance& u = ds.utterances[static_cast<size_t>(idx[i])];
    std::snprintf(buf, sizeof(buf), ",%.9g,%.9g\n",
                  proj.coords(static_cast<Eigen::Index>(i), 0),
                  proj.coords(static_cast<Eigen::Index>(i), 1));
    csv += u.id + "," + u.speaker_name + "," + to_string(u.source) + buf;
  }
  write_file_atomic(out_csv, csv);
}

void cmd_fuse(const std::filesystem::path& asv_scores,
              const std::filesystem::path& cm_scores,
              const std::filesystem::path& out_path) {
  const auto asv = parse_scores_text(read_file(asv_scores),
                                     asv_scores.filename().string());
  const auto cm = parse_scores_text(read_file(cm_scores),
                                    cm_scores.filename().string());
  const std::vector<double> fused = score_sum_baseline(asv, cm);
  std::string out;
  char buf[64];
  for (size_t i = 0; i < fused.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%ld %.9g\n", asv[i].first, fused[i]);
    out += buf;
  }
  write_file_atomic(out_path, out);
}

void cmd_report(const std::vector<std::string>& metrics_paths,
                const std::vector<std::string>& names,
                const std::filesystem::path& out_path) {
  detail::require(metrics_paths.size() == names.size(),
                  "report: --metrics and --names must have equal length");
  detail::require(!metrics_paths.empty(), "report: no metrics given");
  std::vector<std::pair<std::string, MetricSuite>> rows;
  for (size_t i = 0; i < metrics_paths.size(); ++i)
    rows.emplace_back(names[i],
                      metric_suite_from_json(read_file(metrics_paths[i])));
  write_file_atomic(out_path, report_table(rows));
}

}  // namespace sasv
