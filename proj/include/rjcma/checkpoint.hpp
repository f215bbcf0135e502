// Copyright 2026 The RJCMA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rjcma/train.hpp"

namespace rjcma::checkpoint {

// "RJCM" checkpoint container. All integers and floats little-endian:
//   char[4]  "RJCM"
//   u32      format version (1)
//   u32      config byte length, then UTF-8 JSON:
//              {"model": {...}, "target": "valence" | "arousal"}
//   u64      tensor count
//   per tensor: u32 name length, UTF-8 name, u64 rows, u64 cols,
//               rows * cols f64 row-major
// Model tensors come first in parameter order, followed by the feature
// normaliser as norm.{audio,visual,text}.{scale,shift} (d_m x 1).
inline constexpr std::uint32_t kVersion = 1;

std::vector<std::uint8_t> encode(const train::TrainedModel& trained);
/// Throws FormatError on a malformed container and DimensionError when the
/// tensors do not match the stored model config.
train::TrainedModel decode(const std::vector<std::uint8_t>& bytes,
                           const std::string& context = "checkpoint");

void save(const std::filesystem::path& path, const train::TrainedModel& trained);
train::TrainedModel load(const std::filesystem::path& path);

}  // namespace rjcma::checkpoint
