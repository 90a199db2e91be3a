// tools/sasv_main.cpp

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

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sasv/error.hpp"
#include "sasv/pipeline.hpp"
#include "sasv/version.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic spoofing-aware speaker verification pipelines"};
  app.set_version_flag("--version", std::string("sasv ") + sasv::kVersion);
  app.require_subcommand(1);

  std::string config, data, out, ckpt, trials, scores_out;
  std::string asv_scores, cm_scores, metrics_list, names_list;
  int threads = 1;
  int k = 3;
  double fusion_weight = 1.0;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->add_option("--config", config, "key=value config file")->required();
  gen->add_option("--out", out, "output directory")->required();

  auto* tr = app.add_subcommand("train", "train a model on a dataset directory");
  tr->add_option("--config", config, "key=value config file")->required();
  tr->add_option("--data", data, "dataset directory")->required();
  tr->add_option("--out", out, "checkpoint output path")->required();
  tr->add_option("--threads", threads, "threads for dev evaluation");

  auto* ev = app.add_subcommand("eval", "score trials and compute metrics");
  ev->add_option("--ckpt", ckpt, "checkpoint path")->required();
  ev->add_option("--data", data, "dataset directory")->required();
  ev->add_option("--trials", trials, "trial list file")->required();
  ev->add_option("--out", out, "metrics JSON output path")->required();
  ev->add_option("--fusion-weight", fusion_weight,
                 "countermeasure weight in the fused score");
  ev->add_option("--scores", scores_out, "optional per-trial score file");

  auto* cl = app.add_subcommand("cluster", "cluster eval embeddings");
  cl->add_option("--ckpt", ckpt, "checkpoint path")->required();
  cl->add_option("--data", data, "dataset directory")->required();
  cl->add_option("--k", k, "number of clusters")->required();
  cl->add_option("--out", out, "cluster CSV output path")->required();

  auto* pr = app.add_subcommand("project", "project eval embeddings to 2-D");
  pr->add_option("--ckpt", ckpt, "checkpoint path")->required();
  pr->add_option("--data", data, "dataset directory")->required();
  pr->add_option("--out", out, "projection CSV output path")->required();

  auto* fu = app.add_subcommand("fuse", "sum two per-trial score files");
  fu->add_option("--asv-scores", asv_scores, "speaker scores file")->required();
  fu->add_option("--cm-scores", cm_scores, "countermeasure scores file")
      ->required();
  fu->add_option("--out", out, "fused score output path")->required();

  auto* re = app.add_subcommand("report", "render a metrics table");
  re->add_option("--metrics", metrics_list, "comma-separated metrics JSONs")
      ->required();
  re->add_option("--names", names_list, "comma-separated row names")->required();
  re->add_option("--out", out, "markdown output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      sasv::cmd_gen_data(config, out);
    } else if (tr->parsed()) {
      sasv::cmd_train(config, data, out, threads);
    } else if (ev->parsed()) {
      sasv::cmd_eval(ckpt, data, trials, out, fusion_weight, scores_out);
    } else if (cl->parsed()) {
      sasv::cmd_cluster(ckpt, data, k, out);
    } else if (pr->parsed()) {
      sasv::cmd_project(ckpt, data, out);
    } else if (fu->parsed()) {
      sasv::cmd_fuse(asv_scores, cm_scores, out);
    } else if (re->parsed()) {
      sasv::cmd_report(split_commas(metrics_list), split_commas(names_list),
                       out);
    }
  } catch (const sasv::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 2;
  } catch (const sasv::ContractError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const sasv::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
