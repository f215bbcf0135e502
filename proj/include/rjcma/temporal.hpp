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

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rjcma/autodiff.hpp"
#include "rjcma/params.hpp"

// Causal dilated temporal convolutions applied per modality before fusion.
namespace rjcma::temporal {

struct TcnBlockConfig {
  std::size_t channels_in = 1;
  std::size_t channels_out = 1;
  std::size_t kernel_size = 3;
  std::size_t dilation = 1;
  bool residual = true;

  std::size_t left_padding() const noexcept { return (kernel_size - 1) * dilation; }
  void validate() const;
};

/// out[:, t] = bias + sum_k taps[k] * x[:, t - (kernel_size - 1 - k) * dilation],
/// with frames before 0 treated as zero. taps[kernel_size - 1] therefore
/// multiplies the current frame. Output length equals input length.
ad::Var causal_dilated_conv(const ad::Var& x, std::span<const ad::Var> taps, const ad::Var& bias,
                            const TcnBlockConfig& cfg);

/// Plain-tensor reference used by tests and the CLI.
Tensor causal_dilated_conv(const Tensor& x, std::span<const Tensor> taps, const Tensor& bias,
                           const TcnBlockConfig& cfg);

/// Default per-modality stack: `blocks` residual blocks, kernel 3, dilations
/// 1, 2, 4, ... and channels preserved.
std::vector<TcnBlockConfig> default_stack(std::size_t channels, std::size_t blocks = 2,
                                          std::size_t kernel_size = 3);

/// Blocks of relu(conv(x)) with a residual add when channel counts match.
class TcnStack {
 public:
  TcnStack() = default;
  TcnStack(std::string prefix, std::vector<TcnBlockConfig> blocks);

  /// Appends the stack's weights to `store` (uniform +-1/sqrt(fan_in)) and
  /// remembers their indices.
  void register_params(ParamStore& store, std::mt19937_64& rng);

  /// `bound` holds one Var per entry of the ParamStore used at registration.
  ad::Var forward(const ad::Var& x, std::span<const ad::Var> bound) const;

  std::size_t receptive_field() const noexcept;
  std::size_t param_count() const noexcept;
  const std::vector<TcnBlockConfig>& blocks() const noexcept { return blocks_; }
  const std::string& prefix() const noexcept { return prefix_; }

 private:
  struct BlockSlots {
    std::vector<std::size_t> taps;
    std::size_t bias = 0;
  };

  std::string prefix_;
  std::vector<TcnBlockConfig> blocks_;
  std::vector<BlockSlots> slots_;
};

}  // namespace rjcma::temporal
