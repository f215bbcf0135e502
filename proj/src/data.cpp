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

#include "rjcma/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include <json.hpp>

#include "binary_io.hpp"
#include "rjcma/errors.hpp"

namespace rjcma {
namespace io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace io

namespace data {

const char* target_name(Target t) { return t == Target::kValence ? "valence" : "arousal"; }

Target parse_target(const std::string& s) {
  if (s == "valence") return Target::kValence;
  if (s == "arousal") return Target::kArousal;
  throw ConfigError("unknown target '" + s + "' (expected valence or arousal)");
}

void SequenceRecord::validate() const {
  const std::size_t t = frames();
  if (t == 0) throw DimensionError("sequence '" + id + "' has no frames");
  if (arousal.size() != t) throw DimensionError("sequence '" + id + "': label lengths differ");
  for (std::size_t m = 0; m < 3; ++m) {
    if (features[m].cols() != t || features[m].rows() == 0) {
      throw DimensionError("sequence '" + id + "': modality " + std::to_string(m) + " has shape " +
                           to_string(features[m].shape()) + ", expected T = " + std::to_string(t));
    }
  }
  auto check = [&](double v) {
    if (v != kInvalidLabel && !(v >= -1.0 && v <= 1.0)) {
      throw ConfigError("sequence '" + id + "': label " + std::to_string(v) + " outside [-1, 1]");
    }
  };
  std::for_each(valence.begin(), valence.end(), check);
  std::for_each(arousal.begin(), arousal.end(), check);
}

void WindowSpec::validate() const {
  if (length == 0) throw ConfigError("window length must be positive");
  if (stride == 0 || stride > length) throw ConfigError("window stride must satisfy 1 <= stride <= length");
}

std::size_t window_count(std::size_t frames, const WindowSpec& spec) {
  spec.validate();
  if (frames <= spec.length) return 1;
  return (frames - spec.length + spec.stride - 1) / spec.stride + 1;
}

std::vector<Window> window(const SequenceRecord& rec, const WindowSpec& spec) {
  const std::size_t total = rec.frames();
  if (total == 0) throw DimensionError("window: sequence '" + rec.id + "' has no frames");
  const std::size_t count = window_count(total, spec);
  const std::size_t k = spec.length;
  std::vector<Window> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    Window win;
    win.sequence_id = rec.id;
    win.offset = w * spec.stride;
    win.valid_frames = std::min(k, total - win.offset);
    win.valence.resize(k);
    win.arousal.resize(k);
    for (std::size_t m = 0; m < 3; ++m) win.features[m] = Tensor(rec.features[m].rows(), k);
    for (std::size_t t = 0; t < k; ++t) {
      const std::size_t src = std::min(win.offset + t, total - 1);
      win.valence[t] = rec.valence[src];
      win.arousal[t] = rec.arousal[src];
      for (std::size_t m = 0; m < 3; ++m) {
        for (std::size_t r = 0; r < rec.features[m].rows(); ++r) {
          win.features[m](r, t) = rec.features[m](r, src);
        }
      }
    }
    out.push_back(std::move(win));
  }
  return out;
}

std::vector<Window> eval_windows(const SequenceRecord& rec, std::size_t length) {
  return window(rec, WindowSpec{length, length});
}

WindowMasks build_masks(const Window& w) {
  WindowMasks masks;
  const std::size_t k = w.length();
  for (std::size_t m = 0; m < 3; ++m) {
    masks.frame[m] = fusion::ModalityFeatures::from_features(fusion::kModalities[m], w.features[m]).frame_mask;
  }
  masks.valence.assign(k, 0);
  masks.arousal.assign(k, 0);
  for (std::size_t t = 0; t < std::min(k, w.valid_frames); ++t) {
    masks.valence[t] = w.valence[t] != kInvalidLabel ? 1 : 0;
    masks.arousal[t] = w.arousal[t] != kInvalidLabel ? 1 : 0;
  }
  return masks;
}

void SyntheticConfig::validate() const {
  if (n_sequences == 0) throw ConfigError("synthetic: n_sequences must be positive");
  if (min_frames == 0 || max_frames < min_frames) {
    throw ConfigError("synthetic: need 1 <= min_frames <= max_frames");
  }
  for (std::size_t d : dims) {
    if (d == 0) throw ConfigError("synthetic: modality dims must be positive");
  }
  if (!(latent_step >= 0.0) || !(nuisance_scale >= 0.0)) {
    throw ConfigError("synthetic: latent_step and nuisance_scale must be >= 0");
  }
  for (std::size_t m = 0; m < 3; ++m) {
    if (!(noise[m] >= 0.0)) throw ConfigError("synthetic: noise must be >= 0");
    if (!(dropout[m] >= 0.0 && dropout[m] < 1.0)) throw ConfigError("synthetic: dropout must be in [0, 1)");
  }
  if (!(label_dropout >= 0.0 && label_dropout < 1.0)) {
    throw ConfigError("synthetic: label_dropout must be in [0, 1)");
  }
  if (label_map != "linear" && label_map != "smooth") {
    throw ConfigError("synthetic: label_map must be 'linear' or 'smooth'");
  }
  if (!(fps > 0.0)) throw ConfigError("synthetic: fps must be positive");
}

namespace {

/// Clipped Gaussian random walk squashed through tanh; rows x frames.
Tensor latent_walk(std::size_t rows, std::size_t frames, double step, std::mt19937_64& rng) {
  std::normal_distribution<double> start(0.0, 0.7);
  std::normal_distribution<double> inc(0.0, step);
  Tensor z(rows, frames);
  for (std::size_t r = 0; r < rows; ++r) {
    double w = start(rng);
    for (std::size_t t = 0; t < frames; ++t) {
      if (t > 0) w = std::clamp(w + inc(rng), -3.0, 3.0);
      z(r, t) = std::tanh(w);
    }
  }
  return z;
}

std::string sequence_id(std::size_t i) {
  std::string s = std::to_string(i);
  return "seq_" + std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

}  // namespace

std::vector<SequenceRecord> generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Dataset-level mixing matrices: d_m x (2 + nuisance_dim).
  const std::size_t width = 2 + cfg.nuisance_dim;
  const double mix_scale = 1.0 / std::sqrt(static_cast<double>(width));
  std::array<Tensor, 3> mixing;
  for (std::size_t m = 0; m < 3; ++m) {
    mixing[m] = Tensor(cfg.dims[m], width);
    for (std::size_t r = 0; r < cfg.dims[m]; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        double g = gauss(rng) * mix_scale;
        if (c < 2) g *= cfg.latent_gain[m][c];
        mixing[m](r, c) = g;
      }
    }
  }

  std::uniform_int_distribution<std::size_t> length_dist(cfg.min_frames, cfg.max_frames);
  std::vector<SequenceRecord> out;
  out.reserve(cfg.n_sequences);
  for (std::size_t s = 0; s < cfg.n_sequences; ++s) {
    SequenceRecord rec;
    rec.id = sequence_id(s);
    rec.fps = cfg.fps;
    const std::size_t frames = length_dist(rng);
    const Tensor shared = latent_walk(2, frames, cfg.latent_step, rng);

    rec.valence.resize(frames);
    rec.arousal.resize(frames);
    for (std::size_t t = 0; t < frames; ++t) {
      const double z0 = shared(0, t), z1 = shared(1, t);
      if (cfg.label_map == "linear") {
        rec.valence[t] = z0;
        rec.arousal[t] = z1;
      } else {
        rec.valence[t] = std::tanh(1.2 * z0 + 0.4 * z1);
        rec.arousal[t] = std::tanh(1.2 * z1 - 0.4 * z0);
      }
    }

    for (std::size_t m = 0; m < 3; ++m) {
      const Tensor nuisance = latent_walk(cfg.nuisance_dim, frames, cfg.latent_step, rng);
      Tensor x(cfg.dims[m], frames);
      for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t r = 0; r < cfg.dims[m]; ++r) {
          double v = mixing[m](r, 0) * shared(0, t) + mixing[m](r, 1) * shared(1, t);
          for (std::size_t c = 0; c < cfg.nuisance_dim; ++c) {
            v += mixing[m](r, 2 + c) * cfg.nuisance_scale * nuisance(c, t);
          }
          x(r, t) = v + cfg.noise[m] * gauss(rng);
        }
      }
      for (std::size_t t = 0; t < frames; ++t) {
        if (unit(rng) < cfg.dropout[m]) {
          for (std::size_t r = 0; r < cfg.dims[m]; ++r) x(r, t) = 0.0;
        }
      }
      rec.features[m] = std::move(x);
    }

    for (std::size_t t = 0; t < frames; ++t) {
      if (unit(rng) < cfg.label_dropout) {
        rec.valence[t] = kInvalidLabel;
        rec.arousal[t] = kInvalidLabel;
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

namespace {

bool frame_is_zero(const Tensor& x, std::size_t t) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (x(r, t) != 0.0) return false;
  }
  return true;
}

}  // namespace

Normalizer Normalizer::identity(const std::array<std::size_t, 3>& dims) {
  Normalizer n;
  for (std::size_t m = 0; m < 3; ++m) {
    n.scale_[m] = Tensor(dims[m], 1, 1.0);
    n.shift_[m] = Tensor(dims[m], 1, 0.0);
  }
  return n;
}

Normalizer Normalizer::fit(const std::vector<SequenceRecord>& train) {
  if (train.empty()) throw InsufficientDataError("normalizer: empty training partition");
  Normalizer n;
  for (std::size_t m = 0; m < 3; ++m) {
    const std::size_t dim = train.front().features[m].rows();
    std::vector<double> sum(dim, 0.0), sumsq(dim, 0.0);
    std::size_t count = 0;
    for (const auto& rec : train) {
      const Tensor& x = rec.features[m];
      if (x.rows() != dim) throw DimensionError("normalizer: modality dims differ across sequences");
      for (std::size_t t = 0; t < x.cols(); ++t) {
        if (frame_is_zero(x, t)) continue;
        ++count;
        for (std::size_t r = 0; r < dim; ++r) sum[r] += x(r, t);
      }
    }
    if (count == 0) throw InsufficientDataError("normalizer: no valid frames in training partition");
    std::vector<double> mu(dim);
    for (std::size_t r = 0; r < dim; ++r) mu[r] = sum[r] / static_cast<double>(count);
    for (const auto& rec : train) {
      const Tensor& x = rec.features[m];
      for (std::size_t t = 0; t < x.cols(); ++t) {
        if (frame_is_zero(x, t)) continue;
        for (std::size_t r = 0; r < dim; ++r) sumsq[r] += (x(r, t) - mu[r]) * (x(r, t) - mu[r]);
      }
    }
    n.scale_[m] = Tensor(dim, 1);
    n.shift_[m] = Tensor(dim, 1);
    for (std::size_t r = 0; r < dim; ++r) {
      const double sd = std::sqrt(sumsq[r] / static_cast<double>(count));
      double a = 1.0;
      if (sd > 0.0) {
        a = kTargetStd[m] / sd;
      } else {
        n.warnings_.push_back(std::string(fusion::modality_name(fusion::kModalities[m])) +
                              " dimension " + std::to_string(r) +
                              " has zero variance; centred with scale 1");
      }
      n.scale_[m](r, 0) = a;
      n.shift_[m](r, 0) = kTargetMean[m] - mu[r] * a;
    }
  }
  return n;
}

SequenceRecord Normalizer::apply(const SequenceRecord& rec) const {
  SequenceRecord out = rec;
  for (std::size_t m = 0; m < 3; ++m) {
    Tensor& x = out.features[m];
    if (x.rows() != scale_[m].rows()) {
      throw DimensionError("normalizer: sequence '" + rec.id + "' modality " + std::to_string(m) +
                           " has " + std::to_string(x.rows()) + " dims, normalizer expects " +
                           std::to_string(scale_[m].rows()));
    }
    for (std::size_t t = 0; t < x.cols(); ++t) {
      if (frame_is_zero(x, t)) continue;
      for (std::size_t r = 0; r < x.rows(); ++r) x(r, t) = x(r, t) * scale_[m](r, 0) + shift_[m](r, 0);
    }
  }
  return out;
}

std::vector<SequenceRecord> Normalizer::apply(const std::vector<SequenceRecord>& recs) const {
  std::vector<SequenceRecord> out;
  out.reserve(recs.size());
  for (const auto& r : recs) out.push_back(apply(r));
  return out;
}

void Normalizer::append_to(ParamStore& store) const {
  for (std::size_t m = 0; m < 3; ++m) {
    const std::string base = std::string("norm.") + fusion::modality_name(fusion::kModalities[m]);
    store.add(base + ".scale", scale_[m]);
    store.add(base + ".shift", shift_[m]);
  }
}

Normalizer Normalizer::from_store(const ParamStore& store) {
  Normalizer n;
  for (std::size_t m = 0; m < 3; ++m) {
    const std::string base = std::string("norm.") + fusion::modality_name(fusion::kModalities[m]);
    n.scale_[m] = store.at(base + ".scale");
    n.shift_[m] = store.at(base + ".shift");
    if (n.scale_[m].cols() != 1 || n.shift_[m].shape() != n.scale_[m].shape()) {
      throw DimensionError("normalizer: malformed " + base + " tensors");
    }
  }
  return n;
}

namespace {

constexpr std::string_view kFeatureMagic = "MMF1";
constexpr std::uint32_t kFeatureVersion = 1;

}  // namespace

std::vector<std::uint8_t> encode_features(const SequenceRecord& rec) {
  rec.validate();
  io::ByteWriter w;
  w.bytes(kFeatureMagic);
  w.u32(kFeatureVersion);
  w.string_u32(rec.id);
  w.f64(rec.fps);
  w.u64(rec.frames());
  w.u32(3);
  for (const auto& x : rec.features) {
    w.u64(x.rows());
    w.u64(x.cols());
  }
  for (const auto& x : rec.features) {
    for (double v : x.data()) w.f64(v);
  }
  for (double v : rec.valence) w.f64(v);
  for (double v : rec.arousal) w.f64(v);
  return w.take();
}

SequenceRecord decode_features(const std::vector<std::uint8_t>& bytes) {
  io::ByteReader r(bytes, "MMF1");
  if (r.bytes(4) != kFeatureMagic) {
    throw FormatError("MMF1: bad magic", 0);
  }
  const std::uint32_t version = r.u32();
  if (version != kFeatureVersion) r.fail("unsupported version " + std::to_string(version));
  SequenceRecord rec;
  const std::uint32_t id_len = r.u32();
  rec.id = r.bytes(id_len);
  rec.fps = r.f64();
  const std::uint64_t frames = r.u64();
  if (frames == 0) r.fail("empty sequence (T = 0)");
  const std::uint32_t n_modalities = r.u32();
  if (n_modalities != 3) r.fail("expected 3 modalities, found " + std::to_string(n_modalities));
  std::array<std::uint64_t, 3> dims{};
  for (std::size_t m = 0; m < 3; ++m) {
    dims[m] = r.u64();
    const std::uint64_t f = r.u64();
    if (f != frames) r.fail("modality frame count " + std::to_string(f) + " differs from T");
    if (dims[m] == 0) r.fail("modality dimension is zero");
  }
  for (std::size_t m = 0; m < 3; ++m) {
    if (dims[m] > r.remaining() / 8 / frames) r.need(dims[m] * frames * 8, "modality payload");
    std::vector<double> payload(dims[m] * frames);
    for (double& v : payload) v = r.f64();
    for (double v : payload) {
      if (!std::isfinite(v)) r.fail("non-finite feature value");
    }
    rec.features[m] = Tensor(dims[m], frames, std::move(payload));
  }
  r.need(frames * 16, "labels");
  rec.valence.resize(frames);
  rec.arousal.resize(frames);
  for (double& v : rec.valence) v = r.f64();
  for (double& v : rec.arousal) v = r.f64();
  if (r.remaining() != 0) r.fail(std::to_string(r.remaining()) + " trailing bytes");
  try {
    rec.validate();
  } catch (const std::exception& e) {
    r.fail(e.what());
  }
  return rec;
}

void write_features(const std::filesystem::path& path, const SequenceRecord& rec) {
  io::write_file(path, encode_features(rec));
}

SequenceRecord read_features(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return decode_features(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : entries) {
    j.push_back({{"id", e.id}, {"path", e.path}, {"split", e.split}});
  }
  io::write_text_file(path, j.dump(2) + "\n");
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what(), 0);
  }
  if (!j.is_array()) throw FormatError("manifest " + path.string() + ": expected a JSON list", 0);
  std::vector<ManifestEntry> out;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("id") || !item.contains("path") || !item.contains("split")) {
      throw FormatError("manifest " + path.string() + ": entries need id, path and split", 0);
    }
    ManifestEntry e{item["id"].get<std::string>(), item["path"].get<std::string>(),
                    item["split"].get<std::string>()};
    if (e.split != "train" && e.split != "val") {
      throw FormatError("manifest " + path.string() + ": split must be train or val, got '" +
                            e.split + "'",
                        0);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<SequenceRecord> load_manifest_records(const std::filesystem::path& manifest,
                                                  std::vector<ManifestEntry>* entries) {
  auto list = read_manifest(manifest);
  const auto base = manifest.parent_path();
  std::vector<SequenceRecord> recs;
  recs.reserve(list.size());
  for (const auto& e : list) {
    auto rec = read_features(base / e.path);
    if (rec.id != e.id) {
      throw FormatError(e.path + ": id '" + rec.id + "' does not match manifest id '" + e.id + "'", 0);
    }
    recs.push_back(std::move(rec));
  }
  if (entries) *entries = std::move(list);
  return recs;
}

std::vector<std::size_t> make_folds(std::size_t n_sequences, std::size_t n_folds,
                                    std::uint64_t seed, const std::vector<bool>& canonical_val) {
  if (n_folds < 2) throw ConfigError("make_folds: need at least 2 folds");
  if (n_folds > n_sequences) {
    throw InsufficientDataError("make_folds: " + std::to_string(n_sequences) +
                                " sequences cannot fill " + std::to_string(n_folds) + " folds");
  }
  if (!canonical_val.empty() && canonical_val.size() != n_sequences) {
    throw DimensionError("make_folds: canonical split size differs from sequence count");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> folds(n_sequences, 0);
  const bool canonical =
      std::find(canonical_val.begin(), canonical_val.end(), true) != canonical_val.end();
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n_sequences; ++i) {
    if (!canonical || !canonical_val[i]) rest.push_back(i);
  }
  std::shuffle(rest.begin(), rest.end(), rng);
  const std::size_t first = canonical ? 1 : 0;
  const std::size_t slots = n_folds - first;
  if (rest.size() < slots) {
    throw InsufficientDataError("make_folds: not enough non-canonical sequences for " +
                                std::to_string(slots) + " folds");
  }
  for (std::size_t j = 0; j < rest.size(); ++j) folds[rest[j]] = first + j % slots;
  return folds;
}

}  // namespace data
}  // namespace rjcma
