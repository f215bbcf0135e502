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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rjcma/autodiff.hpp"
#include "rjcma/params.hpp"

// Recursive joint cross-modal attention over audio, visual and text streams.
//
// Features are (dim x frames) matrices. For each recursion step the three
// current streams are stacked and passed through a shared affine layer to form
// the joint representation J (d x K). Each modality m then computes
//
//   C_m     = tanh((X_m^T W_jm) J / sqrt(d))      K x K
//   H_m     = relu((X_m W_cm) C_m)                d_m x K
//   X_att,m = H_m W_hm + X_m                      d_m x K
//
// and the attended streams feed the next step. After the last step the streams
// are stacked again (d x K) and a small MLP maps every frame to [-1, 1].
namespace rjcma::fusion {

enum class Modality : std::uint8_t { kAudio = 0, kVisual = 1, kText = 2 };
inline constexpr std::array<Modality, 3> kModalities = {Modality::kAudio, Modality::kVisual,
                                                        Modality::kText};
const char* modality_name(Modality m);

using Mask = std::vector<std::uint8_t>;

/// One modality's frame-aligned features; masked frames hold zero vectors.
struct ModalityFeatures {
  Modality modality = Modality::kAudio;
  Tensor features;  // d_m x K
  Mask frame_mask;  // K entries, 1 = valid frame

  /// Builds the mask from all-zero columns.
  static ModalityFeatures from_features(Modality m, Tensor features);
};

struct FusionConfig {
  std::size_t d_audio = 16;
  std::size_t d_visual = 16;
  std::size_t d_text = 16;
  std::size_t frames = 64;     // window length K
  std::size_t iterations = 3;  // recursion depth l

  std::size_t joint_dim() const noexcept { return d_audio + d_visual + d_text; }
  std::size_t dim(Modality m) const noexcept;
  void validate() const;
};

/// Initialisation scales. Attention matrices start small so that training
/// begins close to the residual identity.
struct InitConfig {
  double attention_scale = 1e-2;
};

/// Indices of the fusion weights inside a ParamStore.
struct RjcmaParams {
  struct ModalitySlots {
    std::size_t w_joint = 0;  // d_m x d
    std::size_t w_corr = 0;   // K x K
    std::size_t w_att = 0;    // K x K
  };
  struct HeadSlots {
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
  };

  std::size_t fc_weight = 0;  // d x d
  std::size_t fc_bias = 0;    // d x 1
  std::vector<std::array<ModalitySlots, 3>> steps;
  HeadSlots head;
  std::size_t head_hidden = 0;

  /// Registers every fusion tensor in `store`:
  ///   fc_joint.weight, fc_joint.bias,
  ///   step{i}.{audio,visual,text}.{w_joint,w_corr,w_att},
  ///   head.fc1.{weight,bias}, head.fc2.{weight,bias}.
  static RjcmaParams create(const FusionConfig& cfg, ParamStore& store, std::mt19937_64& rng,
                            const InitConfig& init = {});

  /// Number of scalars registered by create().
  static std::size_t scalar_count(const FusionConfig& cfg);
  static std::size_t head_hidden_dim(const FusionConfig& cfg);
};

/// Per-step tensors kept for inspection.
struct StepIntermediates {
  ad::Var joint;
  std::array<ad::Var, 3> correlation;
  std::array<ad::Var, 3> attention;
  std::array<ad::Var, 3> attended;
};

struct FusionOutput {
  ad::Var attended;     // d x K
  ad::Var predictions;  // 1 x K, in [-1, 1]
  std::vector<StepIntermediates> steps;
};

ad::Var joint_representation(const ad::Var& xa, const ad::Var& xv, const ad::Var& xt,
                             const ad::Var& fc_weight, const ad::Var& fc_bias);
ad::Var joint_cross_correlation(const ad::Var& xm, const ad::Var& joint, const ad::Var& w_joint);
ad::Var attention_map(const ad::Var& xm, const ad::Var& correlation, const ad::Var& w_corr);
ad::Var attend(const ad::Var& attention, const ad::Var& w_att, const ad::Var& xm);
ad::Var predict_head(const ad::Var& attended, const ad::Var& w1, const ad::Var& b1,
                     const ad::Var& w2, const ad::Var& b2);

/// Runs `cfg.iterations` recursion steps and the regression head.
/// `bound` holds one Var per entry of the ParamStore the params were created in.
FusionOutput rjcma_forward(const ad::Var& xa, const ad::Var& xv, const ad::Var& xt,
                           const RjcmaParams& params, std::span<const ad::Var> bound,
                           const FusionConfig& cfg, bool keep_intermediates = false);

}  // namespace rjcma::fusion
