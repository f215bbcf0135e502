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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rjcma/autodiff.hpp"
#include "rjcma/data.hpp"

namespace rjcma {
class RjcmaModel;
}

namespace rjcma::metrics {

/// Denominator guard of the concordance correlation coefficient.
inline constexpr double kCccEpsilon = 1e-12;

/// Lin's concordance correlation coefficient over frames where `mask` is
/// non-zero (empty mask = all frames):
///   2 cov(x, y) / (var(x) + var(y) + (mean(x) - mean(y))^2 + eps)
/// with population moments. Element-wise identical series give exactly 1.
/// Throws InsufficientDataError for fewer than 2 valid frames.
double ccc(std::span<const double> pred, std::span<const double> gt,
           std::span<const std::uint8_t> mask = {});

/// 1 - ccc on the tape. `pred` is 1 x K; masked frames are gathered out so
/// they receive exactly zero gradient.
ad::Var ccc_loss(const ad::Var& pred, std::span<const double> gt,
                 std::span<const std::uint8_t> mask = {});

struct SequenceScore {
  std::string id;
  std::optional<double> ccc;  // empty when the sequence has < 2 valid frames
  std::size_t n_frames = 0;
};

/// Global CCC of one target over the concatenation of all valid frames.
struct TargetEval {
  double ccc = 0.0;
  std::size_t n_frames = 0;
  std::vector<SequenceScore> per_sequence;
};

struct EvalResult {
  std::optional<TargetEval> valence;
  std::optional<TargetEval> arousal;

  std::optional<double> mean() const;
  std::size_t n_frames() const;
  /// Keys: ccc_valence, ccc_arousal, mean, n_frames, per_sequence.
  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Predictions and labels of one sequence after windowing (padding removed).
struct SequencePrediction {
  std::string id;
  std::vector<double> pred;
  std::vector<double> gt;  // -5 where invalid
};

/// Runs `model` over non-overlapping windows of every (already normalised)
/// record and collects frame-level predictions in sequence order.
std::vector<SequencePrediction> predict_sequences(const RjcmaModel& model,
                                                  const std::vector<data::SequenceRecord>& records,
                                                  data::Target target);

TargetEval score(const std::vector<SequencePrediction>& predictions);

/// predict_sequences + score. Throws InsufficientDataError on an empty
/// partition or fewer than 2 valid frames overall.
TargetEval evaluate(const RjcmaModel& model, const std::vector<data::SequenceRecord>& records,
                    data::Target target);

}  // namespace rjcma::metrics
