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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rjcma/autodiff.hpp"
#include "rjcma/fusion.hpp"
#include "rjcma/params.hpp"
#include "rjcma/temporal.hpp"

namespace rjcma {

struct ModelConfig {
  fusion::FusionConfig fusion;
  bool tcn_enabled = true;
  std::size_t tcn_blocks = 2;
  std::size_t tcn_kernel = 3;
  fusion::InitConfig init;

  void validate() const;
};

/// Per-modality TCN stacks followed by the recursive fusion block and the
/// regression head. One model predicts one target.
class RjcmaModel {
 public:
  /// Empty model; assign from create() or from_params() before use.
  RjcmaModel() = default;

  static RjcmaModel create(const ModelConfig& cfg, std::uint64_t seed);
  /// Adopts `params` after checking every name and shape against the layout
  /// implied by `cfg`. Throws DimensionError on any mismatch.
  static RjcmaModel from_params(const ModelConfig& cfg, const ParamStore& params);

  static std::size_t parameter_count(const ModelConfig& cfg);

  std::vector<ad::Var> bind(ad::Tape& tape, bool requires_grad = true) const;

  /// Full forward on a tape. `inputs` are the raw (d_m x K) modality features.
  fusion::FusionOutput forward(ad::Tape& tape, std::span<const ad::Var> bound,
                               const std::array<Tensor, 3>& inputs,
                               bool keep_intermediates = false) const;

  /// Inference without gradients; returns the 1 x K predictions.
  Tensor predict(const std::array<Tensor, 3>& inputs) const;

  const ModelConfig& config() const noexcept { return config_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  const fusion::RjcmaParams& layout() const noexcept { return layout_; }
  const std::array<temporal::TcnStack, 3>& tcn() const noexcept { return tcn_; }

 private:
  void build(std::uint64_t seed);

  ModelConfig config_;
  ParamStore params_;
  std::array<temporal::TcnStack, 3> tcn_;
  fusion::RjcmaParams layout_;
};

}  // namespace rjcma
