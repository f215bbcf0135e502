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

#include <json.hpp>

#include "rjcma/data.hpp"
#include "rjcma/model.hpp"
#include "rjcma/train.hpp"

namespace rjcma::config {

/// Settings of the gradient verification run.
struct GradcheckConfig {
  std::size_t dim = 8;  // d_a = d_v = d_t
  std::size_t frames = 16;
  std::size_t iterations = 3;
  bool tcn_enabled = true;
  double step = 1e-5;
  double tolerance = 1e-4;
  double attention_init_scale = 0.5;
  std::uint64_t seed = 7;
};

/// Model settings that are not implied by the data (dims) or window (K).
struct ModelSection {
  std::size_t iterations = 3;
  bool tcn_enabled = true;
  std::size_t tcn_blocks = 2;
  std::size_t tcn_kernel = 3;
  double attention_init_scale = 1e-2;
};

/// Complete configuration tree of a CLI run.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string target = "both";  // valence, arousal or both
  std::string out = "runs";
  std::string manifest;
  std::size_t n_folds = 6;
  data::SyntheticConfig data;
  data::WindowSpec window{64, 64};
  ModelSection model;
  train::TrainConfig train;
  GradcheckConfig gradcheck;

  std::vector<data::Target> targets() const;
  /// Model config for the given modality dims; K comes from the window.
  ModelConfig model_config(const std::array<std::size_t, 3>& dims) const;
  /// Training settings with seeds derived from `seed`.
  train::ExperimentConfig experiment(const std::array<std::size_t, 3>& dims) const;
  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Rejects unknown keys and wrongly typed values with ConfigError. Missing
/// keys keep their defaults. The result is validated.
RunConfig from_json(const nlohmann::json& j);
RunConfig load(const std::filesystem::path& path);

/// Applies "a.b.c=value" to a JSON tree. `value` is parsed as JSON when
/// possible, otherwise taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Stream-separated seeds derived from one run seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace rjcma::config
