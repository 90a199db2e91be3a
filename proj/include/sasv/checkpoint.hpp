// sasv/checkpoint.hpp

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

#ifndef SASV_CHECKPOINT_HPP_
#define SASV_CHECKPOINT_HPP_

#include <filesystem>

#include "sasv/model.hpp"

namespace sasv {

// Checkpoint layout, all little-endian:
//   magic "SASV" | format version u32 | header length u64 |
//   UTF-8 header ("name rows cols\n" per tensor, fixed order) |
//   f32 payloads in header order, each row-major.
// save(load(x)) is byte-identical to x; a load never returns partial params.
void save_checkpoint(const ModelParams& params,
                     const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace sasv

#endif  // SASV_CHECKPOINT_HPP_
