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

#include "rjcma/model.hpp"

#include <random>

#include "rjcma/errors.hpp"

namespace rjcma {

void ModelConfig::validate() const {
  fusion.validate();
  if (tcn_enabled && (tcn_blocks == 0 || tcn_kernel == 0)) {
    throw ConfigError("model: tcn_blocks and tcn_kernel must be positive when the TCN is enabled");
  }
  if (!(init.attention_scale >= 0.0)) throw ConfigError("model: attention_scale must be >= 0");
}

void RjcmaModel::build(std::uint64_t seed) {
  config_.validate();
  std::mt19937_64 rng(seed);
  params_ = ParamStore{};
  for (fusion::Modality m : fusion::kModalities) {
    auto& stack = tcn_[static_cast<std::size_t>(m)];
    if (config_.tcn_enabled) {
      stack = temporal::TcnStack(
          std::string("tcn.") + fusion::modality_name(m),
          temporal::default_stack(config_.fusion.dim(m), config_.tcn_blocks, config_.tcn_kernel));
    } else {
      stack = temporal::TcnStack(std::string("tcn.") + fusion::modality_name(m), {});
    }
    stack.register_params(params_, rng);
  }
  layout_ = fusion::RjcmaParams::create(config_.fusion, params_, rng, config_.init);
}

RjcmaModel RjcmaModel::create(const ModelConfig& cfg, std::uint64_t seed) {
  RjcmaModel model;
  model.config_ = cfg;
  model.build(seed);
  return model;
}

RjcmaModel RjcmaModel::from_params(const ModelConfig& cfg, const ParamStore& params) {
  RjcmaModel model = create(cfg, 0);
  if (params.size() != model.params_.size()) {
    throw DimensionError("parameter set has " + std::to_string(params.size()) +
                         " tensors, model layout expects " + std::to_string(model.params_.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& slot = model.params_[i];
    const auto& src = params[i];
    if (slot.name != src.name) {
      throw DimensionError("parameter " + std::to_string(i) + " is '" + src.name +
                           "', model layout expects '" + slot.name + "'");
    }
    if (slot.value.shape() != src.value.shape()) {
      throw DimensionError("parameter '" + src.name + "' has shape " + to_string(src.value.shape()) +
                           ", model layout expects " + to_string(slot.value.shape()));
    }
    slot.value = src.value;
  }
  return model;
}

std::size_t RjcmaModel::parameter_count(const ModelConfig& cfg) {
  std::size_t n = fusion::RjcmaParams::scalar_count(cfg.fusion);
  if (cfg.tcn_enabled) {
    for (fusion::Modality m : fusion::kModalities) {
      const std::size_t c = cfg.fusion.dim(m);
      n += cfg.tcn_blocks * (cfg.tcn_kernel * c * c + c);
    }
  }
  return n;
}

std::vector<ad::Var> RjcmaModel::bind(ad::Tape& tape, bool requires_grad) const {
  std::vector<ad::Var> vars;
  vars.reserve(params_.size());
  for (const auto& p : params_) vars.push_back(tape.leaf(p.value, requires_grad));
  return vars;
}

fusion::FusionOutput RjcmaModel::forward(ad::Tape& tape, std::span<const ad::Var> bound,
                                         const std::array<Tensor, 3>& inputs,
                                         bool keep_intermediates) const {
  std::array<ad::Var, 3> streams;
  for (std::size_t m = 0; m < 3; ++m) {
    ad::Var x = tape.constant(inputs[m]);
    streams[m] = tcn_[m].forward(x, bound);
  }
  return fusion::rjcma_forward(streams[0], streams[1], streams[2], layout_, bound, config_.fusion,
                               keep_intermediates);
}

Tensor RjcmaModel::predict(const std::array<Tensor, 3>& inputs) const {
  ad::Tape tape;
  auto bound = bind(tape, false);
  return forward(tape, bound, inputs).predictions.value();
}

}  // namespace rjcma
