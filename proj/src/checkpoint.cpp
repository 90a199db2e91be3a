// src/checkpoint.cpp

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

#include "sasv/checkpoint.hpp"

#include <cstring>
#include <map>
#include <sstream>
#include <vector>

#include "sasv/error.hpp"
#include "sasv/io_util.hpp"

namespace sasv {

namespace {

constexpr char kMagic[4] = {'S', 'A', 'S', 'V'};
constexpr std::uint32_t kVersion = 1;

void append_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}
void append_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}
std::uint32_t read_u32_le(const std::string& s, size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + i]))
         << (8 * i);
  return v;
}
std::uint64_t read_u64_le(const std::string& s, size_t off) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[off + i]))
         << (8 * i);
  return v;
}

struct TensorMeta {
  std::string name;
  Eigen::Index rows = 0, cols = 0;
};

}  // namespace

void save_checkpoint(const ModelParams& params,
                     const std::filesystem::path& path) {
  std::string header;
  params.for_each_tensor([&](const char* name, const Eigen::MatrixXd& m, bool) {
    header += name;
    header += ' ';
    header += std::to_string(m.rows());
    header += ' ';
    header += std::to_string(m.cols());
    header += '\n';
  });

  std::string out(kMagic, 4);
  append_u32_le(out, kVersion);
  append_u64_le(out, header.size());
  out += header;
  params.for_each_tensor([&](const char*, const Eigen::MatrixXd& m, bool) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const float f = static_cast<float>(m(i, j));
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        append_u32_le(out, bits);
      }
  });
  write_file_atomic(path, out);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  const std::string name = path.filename().string();
  if (data.size() < 16 || std::memcmp(data.data(), kMagic, 4) != 0)
    throw IoError(name + ": bad magic, not a checkpoint");
  const std::uint32_t version = read_u32_le(data, 4);
  if (version != kVersion)
    throw IoError(name + ": unsupported checkpoint version " +
                  std::to_string(version));
  const std::uint64_t header_len = read_u64_le(data, 8);
  if (16 + header_len > data.size())
    throw IoError(name + ": truncated header");

  std::vector<TensorMeta> metas;
  {
    std::istringstream in(data.substr(16, header_len));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      TensorMeta m;
      if (!(ls >> m.name >> m.rows >> m.cols) || m.rows < 0 || m.cols < 0)
        throw IoError(name + ": malformed header line '" + line + "'");
      metas.push_back(std::move(m));
    }
  }

  // parse every payload before touching the result object, so a bad file
  // never yields partial params
  std::map<std::string, Eigen::MatrixXd> tensors;
  size_t off = 16 + header_len;
  for (const auto& m : metas) {
    const size_t need = static_cast<size_t>(m.rows) *
                        static_cast<size_t>(m.cols) * 4;
    if (off + need > data.size())
      throw IoError(name + ": truncated, missing payload for tensor '" +
                    m.name + "'");
    Eigen::MatrixXd t(m.rows, m.cols);
    for (Eigen::Index i = 0; i < m.rows; ++i)
      for (Eigen::Index j = 0; j < m.cols; ++j, off += 4) {
        const std::uint32_t bits = read_u32_le(data, off);
        float f;
        std::memcpy(&f, &bits, 4);
        t(i, j) = static_cast<double>(f);
      }
    if (!tensors.emplace(m.name, std::move(t)).second)
      throw IoError(name + ": duplicate tensor '" + m.name + "'");
  }
  if (off != data.size())
    throw IoError(name + ": payload length disagrees with header");

  ModelParams params;
  params.for_each_tensor([&](const char* tn, Eigen::MatrixXd& dst, bool) {
    auto it = tensors.find(tn);
    if (it == tensors.end())
      throw IoError(name + ": missing tensor '" + std::string(tn) + "'");
    dst = std::move(it->second);
    tensors.erase(it);
  });
  if (!tensors.empty())
    throw IoError(name + ": unexpected tensor '" + tensors.begin()->first +
                  "'");

  params.dims.asv_dim = static_cast<int>(params.f_asv_w.rows());
  params.dims.asv_proj = static_cast<int>(params.f_asv_w.cols());
  params.dims.raw_dim = static_cast<int>(params.f_raw_w1.rows());
  params.dims.raw_hidden = static_cast<int>(params.f_raw_w1.cols());
  params.dims.raw_proj = static_cast<int>(params.f_raw_w2.cols());
  params.dims.embed_dim = static_cast<int>(params.f_c_w.cols());
  params.dims.n_speakers = static_cast<int>(params.asv_class_w.cols());
  try {
    params.validate_shapes();
  } catch (const ContractError& e) {
    throw IoError(name + ": inconsistent tensor shapes: " + e.what());
  }
  return params;
}

}  // namespace sasv
