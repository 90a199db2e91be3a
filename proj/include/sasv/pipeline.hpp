// sasv/pipeline.hpp

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

#ifndef SASV_PIPELINE_HPP_
#define SASV_PIPELINE_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "sasv/dataset.hpp"
#include "sasv/trainer.hpp"

namespace sasv {

// Everything the pipelines read from a config file. Files hold key=value
// lines with '#' comments; every key is validated against the schema before
// any work starts, and the one `seed` key drives generation, sampling and
// initialization alike.
struct RunConfig {
  DatasetConfig dataset;
  TrainConfig train;
};

RunConfig parse_run_config_text(const std::string& text,
                                const std::string& name);
RunConfig load_run_config(const std::filesystem::path& path);

// SASV_SEED in the environment overrides the config seed.
void apply_seed_override(RunConfig& cfg);

// Subcommand bodies. They throw ContractError/IoError for rejected inputs and
// NumericError for numeric failures; main() maps those to exit codes 1 and 2.
// All file outputs are written atomically (temp file + rename).
void cmd_gen_data(const std::filesystem::path& config_path,
                  const std::filesystem::path& out_dir);
void cmd_train(const std::filesystem::path& config_path,
               const std::filesystem::path& data_dir,
               const std::filesystem::path& out_checkpoint, int threads);
void cmd_eval(const std::filesystem::path& checkpoint_path,
              const std::filesystem::path& data_dir,
              const std::filesystem::path& trials_path,
              const std::filesystem::path& out_metrics, double fusion_weight,
              const std::filesystem::path& scores_out = {});
void cmd_cluster(const std::filesystem::path& checkpoint_path,
                 const std::filesystem::path& data_dir, int k,
                 const std::filesystem::path& out_csv);
void cmd_project(const std::filesystem::path& checkpoint_path,
                 const std::filesystem::path& data_dir,
                 const std::filesystem::path& out_csv);
void cmd_fuse(const std::filesystem::path& asv_scores,
              const std::filesystem::path& cm_scores,
              const std::filesystem::path& out_path);
void cmd_report(const std::vector<std::string>& metrics_paths,
                const std::vector<std::string>& names,
                const std::filesystem::path& out_path);

}  // namespace sasv

#endif  // SASV_PIPELINE_HPP_
