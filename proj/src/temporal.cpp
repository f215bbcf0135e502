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

#include "rjcma/temporal.hpp"

#include <cmath>

#include "rjcma/errors.hpp"

namespace rjcma::temporal {

void TcnBlockConfig::validate() const {
  if (channels_in == 0 || channels_out == 0 || kernel_size == 0 || dilation == 0) {
    throw ConfigError("TCN block: channels, kernel_size and dilation must be positive");
  }
}

namespace {

void check_conv_shapes(const Shape& x, std::span<const Shape> taps, const Shape& bias,
                       const TcnBlockConfig& cfg) {
  cfg.validate();
  if (x.rows != cfg.channels_in) {
    throw DimensionError("causal_dilated_conv: input has " + std::to_string(x.rows) +
                         " channels, block expects " + std::to_string(cfg.channels_in));
  }
  if (x.cols == 0) throw DimensionError("causal_dilated_conv: input has no frames");
  if (taps.size() != cfg.kernel_size) {
    throw DimensionError("causal_dilated_conv: expected " + std::to_string(cfg.kernel_size) +
                         " taps, got " + std::to_string(taps.size()));
  }
  for (const Shape& t : taps) {
    if (t != Shape{cfg.channels_out, cfg.channels_in}) {
      throw DimensionError("causal_dilated_conv: tap shape " + to_string(t));
    }
  }
  if (bias != Shape{cfg.channels_out, 1}) {
    throw DimensionError("causal_dilated_conv: bias shape " + to_string(bias));
  }
}

}  // namespace

ad::Var causal_dilated_conv(const ad::Var& x, std::span<const ad::Var> taps, const ad::Var& bias,
                            const TcnBlockConfig& cfg) {
  std::vector<Shape> tap_shapes;
  for (const auto& t : taps) tap_shapes.push_back(t.shape());
  check_conv_shapes(x.shape(), tap_shapes, bias.shape(), cfg);

  ad::Tape& tape = x.tape();
  const std::size_t frames = x.cols();
  ad::Var out = ad::matmul(bias, tape.constant(Tensor::ones(1, frames)));
  for (std::size_t k = 0; k < cfg.kernel_size; ++k) {
    const std::size_t shift = (cfg.kernel_size - 1 - k) * cfg.dilation;
    if (shift >= frames) continue;
    ad::Var src = shift == 0 ? x : ad::shift_cols_right(x, shift);
    out = ad::add(out, ad::matmul(taps[k], src));
  }
  return out;
}

Tensor causal_dilated_conv(const Tensor& x, std::span<const Tensor> taps, const Tensor& bias,
                           const TcnBlockConfig& cfg) {
  std::vector<Shape> tap_shapes;
  for (const auto& t : taps) tap_shapes.push_back(t.shape());
  check_conv_shapes(x.shape(), tap_shapes, bias.shape(), cfg);

  Tensor out(cfg.channels_out, x.cols());
  for (std::size_t t = 0; t < x.cols(); ++t) {
    for (std::size_t o = 0; o < cfg.channels_out; ++o) {
      double s = bias(o, 0);
      for (std::size_t k = 0; k < cfg.kernel_size; ++k) {
        const std::size_t shift = (cfg.kernel_size - 1 - k) * cfg.dilation;
        if (shift > t) continue;
        for (std::size_t i = 0; i < cfg.channels_in; ++i) s += taps[k](o, i) * x(i, t - shift);
      }
      out(o, t) = s;
    }
  }
  return out;
}

std::vector<TcnBlockConfig> default_stack(std::size_t channels, std::size_t blocks,
                                          std::size_t kernel_size) {
  std::vector<TcnBlockConfig> out;
  std::size_t dilation = 1;
  for (std::size_t b = 0; b < blocks; ++b) {
    out.push_back(TcnBlockConfig{channels, channels, kernel_size, dilation, true});
    dilation *= 2;
  }
  return out;
}

TcnStack::TcnStack(std::string prefix, std::vector<TcnBlockConfig> blocks)
    : prefix_(std::move(prefix)), blocks_(std::move(blocks)) {
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    blocks_[b].validate();
    if (b > 0 && blocks_[b].channels_in != blocks_[b - 1].channels_out) {
      throw ConfigError("TCN stack " + prefix_ + ": channel chain broken at block " +
                        std::to_string(b));
    }
  }
}

void TcnStack::register_params(ParamStore& store, std::mt19937_64& rng) {
  slots_.clear();
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& cfg = blocks_[b];
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.channels_in * cfg.kernel_size));
    std::uniform_real_distribution<double> dist(-bound, bound);
    BlockSlots slots;
    const std::string base = prefix_ + "." + std::to_string(b);
    for (std::size_t k = 0; k < cfg.kernel_size; ++k) {
      Tensor w(cfg.channels_out, cfg.channels_in);
      for (double& v : w.data()) v = dist(rng);
      slots.taps.push_back(store.add(base + ".tap" + std::to_string(k), std::move(w)));
    }
    Tensor bias(cfg.channels_out, 1);
    for (double& v : bias.data()) v = dist(rng);
    slots.bias = store.add(base + ".bias", std::move(bias));
    slots_.push_back(std::move(slots));
  }
}

ad::Var TcnStack::forward(const ad::Var& x, std::span<const ad::Var> bound) const {
  if (slots_.size() != blocks_.size()) throw ContractError("TCN stack used before register_params");
  ad::Var h = x;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& cfg = blocks_[b];
    std::vector<ad::Var> taps;
    for (std::size_t idx : slots_[b].taps) taps.push_back(bound[idx]);
    ad::Var y = ad::relu(causal_dilated_conv(h, taps, bound[slots_[b].bias], cfg));
    h = (cfg.residual && cfg.channels_in == cfg.channels_out) ? ad::add(h, y) : y;
  }
  return h;
}

std::size_t TcnStack::receptive_field() const noexcept {
  std::size_t rf = 1;
  for (const auto& b : blocks_) rf += b.left_padding();
  return rf;
}

std::size_t TcnStack::param_count() const noexcept {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += b.kernel_size * b.channels_out * b.channels_in + b.channels_out;
  return n;
}

}  // namespace rjcma::temporal
