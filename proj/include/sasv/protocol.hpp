// sasv/protocol.hpp

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

#ifndef SASV_PROTOCOL_HPP_
#define SASV_PROTOCOL_HPP_

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "sasv/dataset.hpp"

namespace sasv {

// One line of a logical-access countermeasure protocol file:
//   speaker_id utt_id - system_id_or_- key
// with key in {bonafide, spoof}; system_id is empty for bonafide lines.
struct ProtocolRecord {
  std::string speaker_id;
  std::string utt_id;
  std::string system_id;  // "" when the line carries "-"
  bool bonafide = false;

  bool operator==(const ProtocolRecord&) const = default;
};

std::vector<ProtocolRecord> parse_protocol_text(const std::string& text,
                                                const std::string& name);
std::vector<ProtocolRecord> parse_protocol(const std::filesystem::path& path);
std::string format_protocol(const std::vector<ProtocolRecord>& records);

// Trial list file: "enroll1,enroll2,enroll3 test_id label" per line.
std::vector<TrialRecord> parse_trials_text(const std::string& text,
                                           const std::string& name);
std::vector<TrialRecord> parse_trials(const std::filesystem::path& path);
std::string format_trials(const std::vector<TrialRecord>& trials);

// Manifest file: "utt_id speaker source split" per line.
std::string format_manifest(const Dataset& ds);

// Binary feature file: magic "SASF", format version u32 little-endian, then
// one f32 little-endian vector per utterance in manifest order. The vector
// width is implied by the payload size and the manifest length.
void write_feature_file(const std::filesystem::path& path,
                        const std::vector<Eigen::RowVectorXd>& rows);
std::vector<Eigen::RowVectorXd> read_feature_file(
    const std::filesystem::path& path, size_t n_utterances);

}  // namespace sasv

#endif  // SASV_PROTOCOL_HPP_
