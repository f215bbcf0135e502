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

#include "rjcma/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "rjcma/errors.hpp"

namespace rjcma::fusion {

const char* modality_name(Modality m) {
  switch (m) {
    case Modality::kAudio:
      return "audio";
    case Modality::kVisual:
      return "visual";
    case Modality::kText:
      return "text";
  }
  return "?";
}

ModalityFeatures ModalityFeatures::from_features(Modality m, Tensor features) {
  ModalityFeatures out{m, std::move(features), {}};
  out.frame_mask.assign(out.features.cols(), 0);
  for (std::size_t t = 0; t < out.features.cols(); ++t) {
    for (std::size_t r = 0; r < out.features.rows(); ++r) {
      if (out.features(r, t) != 0.0) {
        out.frame_mask[t] = 1;
        break;
      }
    }
  }
  return out;
}

std::size_t FusionConfig::dim(Modality m) const noexcept {
  switch (m) {
    case Modality::kAudio:
      return d_audio;
    case Modality::kVisual:
      return d_visual;
    case Modality::kText:
      return d_text;
  }
  return 0;
}

void FusionConfig::validate() const {
  if (d_audio == 0 || d_visual == 0 || d_text == 0) {
    throw ConfigError("fusion: modality dimensions must be positive");
  }
  if (frames == 0) throw ConfigError("fusion: window length K must be positive");
  if (iterations == 0) throw ConfigError("fusion: iterations must be >= 1");
}

namespace {

Tensor uniform(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(rows, cols);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

double fan_in_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

/// W x + b 1^T, the bias repeated over frames through an explicit ones row.
ad::Var affine(const ad::Var& w, const ad::Var& b, const ad::Var& x) {
  if (b.cols() != 1 || b.rows() != w.rows()) {
    throw DimensionError("affine: bias shape " + to_string(b.shape()) + " for weight " +
                         to_string(w.shape()));
  }
  ad::Var ones = x.tape().constant(Tensor::ones(1, x.cols()));
  return ad::add(ad::matmul(w, x), ad::matmul(b, ones));
}

}  // namespace

std::size_t RjcmaParams::head_hidden_dim(const FusionConfig& cfg) {
  return std::max<std::size_t>(1, cfg.joint_dim() / 2);
}

std::size_t RjcmaParams::scalar_count(const FusionConfig& cfg) {
  const std::size_t d = cfg.joint_dim();
  const std::size_t k = cfg.frames;
  const std::size_t h = head_hidden_dim(cfg);
  const std::size_t per_step = d * d + 3 * 2 * k * k;  // sum_m d_m * d == d * d
  return (d * d + d) + cfg.iterations * per_step + (h * d + h) + (h + 1);
}

RjcmaParams RjcmaParams::create(const FusionConfig& cfg, ParamStore& store, std::mt19937_64& rng,
                                const InitConfig& init) {
  cfg.validate();
  const std::size_t d = cfg.joint_dim();
  const std::size_t k = cfg.frames;
  RjcmaParams p;
  p.fc_weight = store.add("fc_joint.weight", uniform(d, d, fan_in_bound(d), rng));
  p.fc_bias = store.add("fc_joint.bias", uniform(d, 1, fan_in_bound(d), rng));
  for (std::size_t i = 0; i < cfg.iterations; ++i) {
    std::array<ModalitySlots, 3> step{};
    for (Modality m : kModalities) {
      const std::string base =
          "step" + std::to_string(i + 1) + "." + modality_name(m) + ".";
      auto& s = step[static_cast<std::size_t>(m)];
      s.w_joint = store.add(base + "w_joint", uniform(cfg.dim(m), d, fan_in_bound(d), rng));
      s.w_corr = store.add(base + "w_corr", uniform(k, k, init.attention_scale, rng));
      s.w_att = store.add(base + "w_att", uniform(k, k, init.attention_scale, rng));
    }
    p.steps.push_back(step);
  }
  p.head_hidden = head_hidden_dim(cfg);
  p.head.w1 = store.add("head.fc1.weight", uniform(p.head_hidden, d, fan_in_bound(d), rng));
  p.head.b1 = store.add("head.fc1.bias", uniform(p.head_hidden, 1, fan_in_bound(d), rng));
  p.head.w2 = store.add("head.fc2.weight", uniform(1, p.head_hidden, fan_in_bound(p.head_hidden), rng));
  p.head.b2 = store.add("head.fc2.bias", uniform(1, 1, fan_in_bound(p.head_hidden), rng));
  return p;
}

ad::Var joint_representation(const ad::Var& xa, const ad::Var& xv, const ad::Var& xt,
                             const ad::Var& fc_weight, const ad::Var& fc_bias) {
  if (xa.cols() != xv.cols() || xa.cols() != xt.cols()) {
    throw DimensionError("joint_representation: frame counts differ across modalities");
  }
  const std::array<ad::Var, 3> parts{xa, xv, xt};
  ad::Var stacked = ad::concat_rows(parts);
  if (fc_weight.cols() != stacked.rows() || fc_weight.rows() != stacked.rows()) {
    throw DimensionError("joint_representation: fc weight " + to_string(fc_weight.shape()) +
                         " does not match joint dim " + std::to_string(stacked.rows()));
  }
  return affine(fc_weight, fc_bias, stacked);
}

ad::Var joint_cross_correlation(const ad::Var& xm, const ad::Var& joint, const ad::Var& w_joint) {
  if (w_joint.rows() != xm.rows() || w_joint.cols() != joint.rows()) {
    throw DimensionError("joint_cross_correlation: W_j " + to_string(w_joint.shape()) +
                         " incompatible with X " + to_string(xm.shape()) + " and J " +
                         to_string(joint.shape()));
  }
  if (xm.cols() != joint.cols()) {
    throw DimensionError("joint_cross_correlation: frame counts differ");
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(joint.rows()));
  ad::Var xt_w = ad::matmul(ad::transpose(xm), w_joint);
  return ad::tanh(ad::scale(ad::matmul(xt_w, joint), inv_sqrt_d));
}

ad::Var attention_map(const ad::Var& xm, const ad::Var& correlation, const ad::Var& w_corr) {
  const std::size_t k = xm.cols();
  if (w_corr.shape() != Shape{k, k} || correlation.shape() != Shape{k, k}) {
    throw DimensionError("attention_map: expected KxK weights and correlation for K = " +
                         std::to_string(k));
  }
  return ad::relu(ad::matmul(ad::matmul(xm, w_corr), correlation));
}

ad::Var attend(const ad::Var& attention, const ad::Var& w_att, const ad::Var& xm) {
  const std::size_t k = xm.cols();
  if (w_att.shape() != Shape{k, k} || attention.shape() != xm.shape()) {
    throw DimensionError("attend: shape mismatch");
  }
  return ad::add(ad::matmul(attention, w_att), xm);
}

ad::Var predict_head(const ad::Var& attended, const ad::Var& w1, const ad::Var& b1,
                     const ad::Var& w2, const ad::Var& b2) {
  if (w1.cols() != attended.rows() || w2.cols() != w1.rows() || w2.rows() != 1) {
    throw DimensionError("predict_head: layer dims do not chain from " +
                         std::to_string(attended.rows()) + " to 1");
  }
  ad::Var hidden = ad::relu(affine(w1, b1, attended));
  return ad::tanh(affine(w2, b2, hidden));
}

FusionOutput rjcma_forward(const ad::Var& xa, const ad::Var& xv, const ad::Var& xt,
                           const RjcmaParams& params, std::span<const ad::Var> bound,
                           const FusionConfig& cfg, bool keep_intermediates) {
  cfg.validate();
  if (params.steps.size() != cfg.iterations) {
    throw DimensionError("rjcma_forward: parameters hold " + std::to_string(params.steps.size()) +
                         " steps, config asks for " + std::to_string(cfg.iterations));
  }
  std::array<ad::Var, 3> current{xa, xv, xt};
  for (Modality m : kModalities) {
    const auto& x = current[static_cast<std::size_t>(m)];
    if (x.rows() != cfg.dim(m) || x.cols() != cfg.frames) {
      throw DimensionError(std::string("rjcma_forward: ") + modality_name(m) + " features " +
                           to_string(x.shape()) + " do not match config (" +
                           std::to_string(cfg.dim(m)) + "x" + std::to_string(cfg.frames) + ")");
    }
  }

  FusionOutput out;
  for (const auto& step : params.steps) {
    ad::Var joint = joint_representation(current[0], current[1], current[2],
                                         bound[params.fc_weight], bound[params.fc_bias]);
    StepIntermediates inter;
    inter.joint = joint;
    std::array<ad::Var, 3> next;
    for (std::size_t m = 0; m < 3; ++m) {
      const auto& slots = step[m];
      ad::Var c = joint_cross_correlation(current[m], joint, bound[slots.w_joint]);
      ad::Var h = attention_map(current[m], c, bound[slots.w_corr]);
      next[m] = attend(h, bound[slots.w_att], current[m]);
      inter.correlation[m] = c;
      inter.attention[m] = h;
      inter.attended[m] = next[m];
    }
    current = next;
    if (keep_intermediates) out.steps.push_back(inter);
  }
  out.attended = ad::concat_rows(current);
  out.predictions = predict_head(out.attended, bound[params.head.w1], bound[params.head.b1],
                                 bound[params.head.w2], bound[params.head.b2]);
  return out;
}

}  // namespace rjcma::fusion
