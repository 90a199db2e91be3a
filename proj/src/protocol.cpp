// src/protocol.cpp

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

#include "sasv/protocol.hpp"

#include <cstring>
#include <sstream>

#include "sasv/error.hpp"
#include "sasv/io_util.hpp"

namespace sasv {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string f;
  while (in >> f) fields.push_back(f);
  return fields;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void line_error(const std::string& name, int line_no,
                             const std::string& what) {
  throw IoError(name + " line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::vector<ProtocolRecord> parse_protocol_text(const std::string& text,
                                                const std::string& name) {
  std::vector<ProtocolRecord> records;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_ws(line);
    if (f.size() != 5)
      line_error(name, line_no,
                 "expected 5 fields, got " + std::to_string(f.size()));
    if (f[2] != "-") line_error(name, line_no, "field 3 must be '-'");
    ProtocolRecord r;
    r.speaker_id = f[0];
    r.utt_id = f[1];
    r.system_id = f[3] == "-" ? "" : f[3];
    if (f[4] == "bonafide")
      r.bonafide = true;
    else if (f[4] == "spoof")
      r.bonafide = false;
    else
      line_error(name, line_no, "unknown key '" + f[4] + "'");
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ProtocolRecord> parse_protocol(const std::filesystem::path& path) {
  return parse_protocol_text(read_file(path), path.filename().string());
}

std::string format_protocol(const std::vector<ProtocolRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.speaker_id;
    out += ' ';
    out += r.utt_id;
    out += " - ";
    out += r.system_id.empty() ? "-" : r.system_id;
    out += ' ';
    out += r.bonafide ? "bonafide" : "spoof";
    out += '\n';
  }
  return out;
}

std::vector<TrialRecord> parse_trials_text(const std::string& text,
                                           const std::string& name) {
  std::vector<TrialRecord> trials;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_ws(line);
    if (f.size() != 3)
      line_error(name, line_no,
                 "expected 'enrolls test label', got " +
                     std::to_string(f.size()) + " fields");
    TrialRecord t;
    t.enroll_ids = split_on(f[0], ',');
    for (const auto& e : t.enroll_ids)
      if (e.empty()) line_error(name, line_no, "empty enrollment id");
    t.test_id = f[1];
    try {
      t.label = trial_label_from_string(f[2]);
    } catch (const ContractError& e) {
      line_error(name, line_no, e.what());
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

std::vector<TrialRecord> parse_trials(const std::filesystem::path& path) {
  return parse_trials_text(read_file(path), path.filename().string());
}

std::string format_trials(const std::vector<TrialRecord>& trials) {
  std::string out;
  for (const auto& t : trials) {
    for (size_t i = 0; i < t.enroll_ids.size(); ++i) {
      if (i) out += ',';
      out += t.enroll_ids[i];
    }
    out += ' ';
    out += t.test_id;
    out += ' ';
    out += to_string(t.label);
    out += '\n';
  }
  return out;
}

std::string format_manifest(const Dataset& ds) {
  std::string out;
  for (const auto& u : ds.utterances) {
    out += u.id;
    out += ' ';
    out += u.speaker_name;
    out += ' ';
    out += to_string(u.source);
    out += ' ';
    out += to_string(u.split);
    out += '\n';
  }
  return out;
}

namespace {

constexpr char kFeatureMagic[4] = {'S', 'A', 'S', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;

void append_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint32_t read_u32_le(const std::string& s, size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + i]))
         << (8 * i);
  return v;
}

}  // namespace

void write_feature_file(const std::filesystem::path& path,
                        const std::vector<Eigen::RowVectorXd>& rows) {
  std::string out(kFeatureMagic, 4);
  append_u32_le(out, kFeatureVersion);
  for (const auto& row : rows) {
    for (Eigen::Index i = 0; i < row.size(); ++i) {
      const float f = static_cast<float>(row(i));
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      append_u32_le(out, bits);
    }
  }
  write_file_atomic(path, out);
}

std::vector<Eigen::RowVectorXd> read_feature_file(
    const std::filesystem::path& path, size_t n_utterances) {
  const std::string data = read_file(path);
  const std::string name = path.filename().string();
  if (data.size() < 8 || std::memcmp(data.data(), kFeatureMagic, 4) != 0)
    throw IoError(name + ": bad magic, not a feature file");
  const std::uint32_t version = read_u32_le(data, 4);
  if (version != kFeatureVersion)
    throw IoError(name + ": unsupported version " + std::to_string(version));
  const size_t payload = data.size() - 8;
  if (n_utterances == 0) {
    if (payload != 0) throw IoError(name + ": payload for empty manifest");
    return {};
  }
  if (payload % 4 != 0 || (payload / 4) % n_utterances != 0)
    throw IoError(name + ": payload size " + std::to_string(payload) +
                  " does not divide into " + std::to_string(n_utterances) +
                  " fixed-width vectors");
  const size_t dim = payload / 4 / n_utterances;
  std::vector<Eigen::RowVectorXd> rows(n_utterances);
  size_t off = 8;
  for (auto& row : rows) {
    row.resize(static_cast<Eigen::Index>(dim));
    for (size_t i = 0; i < dim; ++i, off += 4) {
      const std::uint32_t bits = read_u32_le(data, off);
      float f;
      std::memcpy(&f, &bits, 4);
      row(static_cast<Eigen::Index>(i)) = static_cast<double>(f);
    }
  }
  return rows;
}

}  // namespace sasv
