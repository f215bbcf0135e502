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
#include <filesystem>
#include <string>
#include <vector>

#include "rjcma/fusion.hpp"
#include "rjcma/params.hpp"
#include "rjcma/tensor.hpp"

namespace rjcma::data {

/// Label value of frames without a valid annotation.
inline constexpr double kInvalidLabel = -5.0;

using Mask = fusion::Mask;

enum class Target : std::uint8_t { kValence = 0, kArousal = 1 };
const char* target_name(Target t);
/// Accepts "valence" or "arousal"; throws ConfigError otherwise.
Target parse_target(const std::string& s);

/// One frame-synchronised multimodal sequence.
struct SequenceRecord {
  std::string id;
  std::array<Tensor, 3> features;  // audio, visual, text; each d_m x T
  std::vector<double> valence;     // T entries in [-1, 1] or kInvalidLabel
  std::vector<double> arousal;
  double fps = 30.0;

  std::size_t frames() const noexcept { return valence.size(); }
  const std::vector<double>& labels(Target t) const {
    return t == Target::kValence ? valence : arousal;
  }
  /// Throws DimensionError / ConfigError on violated invariants.
  void validate() const;
};

struct WindowSpec {
  std::size_t length = 300;
  std::size_t stride = 200;

  void validate() const;
};

/// Fixed-length slice of one sequence. Frames past the end of the sequence
/// repeat the last frame; their labels are masked through `valid_frames`.
struct Window {
  std::string sequence_id;
  std::size_t offset = 0;
  std::size_t valid_frames = 0;  // frames [0, valid_frames) are real
  std::array<Tensor, 3> features;
  std::vector<double> valence;
  std::vector<double> arousal;

  std::size_t length() const noexcept { return valence.size(); }
  const std::vector<double>& labels(Target t) const {
    return t == Target::kValence ? valence : arousal;
  }
};

struct WindowMasks {
  std::array<Mask, 3> frame;  // 0 where the modality frame is an all-zero dropout
  Mask valence;               // 0 where label == -5 or the frame is padding
  Mask arousal;

  const Mask& label(Target t) const { return t == Target::kValence ? valence : arousal; }
};

/// max(1, ceil((T - K) / stride) + 1) for T >= K, and 1 for T < K.
std::size_t window_count(std::size_t frames, const WindowSpec& spec);
std::vector<Window> window(const SequenceRecord& rec, const WindowSpec& spec);
/// Non-overlapping windows (stride == length); every frame appears once.
std::vector<Window> eval_windows(const SequenceRecord& rec, std::size_t length);
WindowMasks build_masks(const Window& w);

struct SyntheticConfig {
  std::size_t n_sequences = 12;
  std::size_t min_frames = 400;
  std::size_t max_frames = 600;
  std::array<std::size_t, 3> dims = {16, 16, 16};
  double latent_step = 0.15;        // random-walk step sigma
  std::size_t nuisance_dim = 2;     // modality-private latent dimensions
  double nuisance_scale = 1.0;
  std::array<double, 3> noise = {0.05, 0.05, 0.05};
  std::array<double, 3> dropout = {0.0, 0.0, 0.0};  // per-frame zeroing probability
  /// Gain of (valence latent, arousal latent) in each modality's mixing.
  std::array<std::array<double, 2>, 3> latent_gain = {{{0.6, 1.0}, {1.0, 0.6}, {0.8, 0.4}}};
  double label_dropout = 0.02;      // fraction of frames labelled -5
  std::string label_map = "smooth";  // "linear" or "smooth"
  double fps = 30.0;

  void validate() const;
};

/// Deterministic for identical (cfg, seed).
std::vector<SequenceRecord> generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);

/// Per-modality affine map x -> x * scale + shift applied to valid frames;
/// all-zero (dropped) frames stay zero.
class Normalizer {
 public:
  static constexpr std::array<double, 3> kTargetMean = {0.5, 0.5, 0.0};
  static constexpr std::array<double, 3> kTargetStd = {0.5, 0.5, 1.0};

  /// Statistics from `train` only. Zero-variance dimensions are centred with
  /// scale 1 and reported in warnings().
  static Normalizer fit(const std::vector<SequenceRecord>& train);
  /// Identity transform for the given dimensions.
  static Normalizer identity(const std::array<std::size_t, 3>& dims);

  SequenceRecord apply(const SequenceRecord& rec) const;
  std::vector<SequenceRecord> apply(const std::vector<SequenceRecord>& recs) const;

  const std::array<Tensor, 3>& scale() const noexcept { return scale_; }
  const std::array<Tensor, 3>& shift() const noexcept { return shift_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// Stored as norm.{audio,visual,text}.{scale,shift} (d_m x 1).
  void append_to(ParamStore& store) const;
  static Normalizer from_store(const ParamStore& store);

 private:
  std::array<Tensor, 3> scale_;
  std::array<Tensor, 3> shift_;
  std::vector<std::string> warnings_;
};

// "MMF1" feature files. All integers and floats little-endian:
//   char[4]  "MMF1"
//   u32      format version (1)
//   u32      id byte length, then UTF-8 id
//   f64      fps
//   u64      T (frames)
//   u32      modality count (3)
//   3 x { u64 dim, u64 frames }
//   3 x { dim * frames f64, row-major }
//   T f64 valence, T f64 arousal (-5 marks invalid frames)
void write_features(const std::filesystem::path& path, const SequenceRecord& rec);
/// Throws FormatError (with byte offset) on bad magic, truncation, T = 0 or
/// inconsistent counts.
SequenceRecord read_features(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_features(const SequenceRecord& rec);
SequenceRecord decode_features(const std::vector<std::uint8_t>& bytes);

struct ManifestEntry {
  std::string id;
  std::string path;   // relative to the manifest's directory
  std::string split;  // "train" or "val"
};

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
/// Loads every record listed in the manifest, in manifest order.
std::vector<SequenceRecord> load_manifest_records(const std::filesystem::path& manifest,
                                                  std::vector<ManifestEntry>* entries = nullptr);

/// Sequence-level fold assignment; result[i] is the validation fold of
/// sequence i. When `canonical_val` marks sequences, fold 0 is exactly that
/// set and the remaining sequences are shuffled over folds 1..n_folds-1.
/// Otherwise all sequences are shuffled and dealt round-robin.
std::vector<std::size_t> make_folds(std::size_t n_sequences, std::size_t n_folds,
                                    std::uint64_t seed, const std::vector<bool>& canonical_val = {});

}  // namespace rjcma::data
