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

#include "rjcma/checkpoint.hpp"

#include <string>

#include <json.hpp>

#include "binary_io.hpp"
#include "rjcma/config.hpp"
#include "rjcma/errors.hpp"

namespace rjcma::checkpoint {

namespace {

constexpr std::string_view kMagic = "RJCM";

bool is_norm(const std::string& name) { return name.rfind("norm.", 0) == 0; }

}  // namespace

std::vector<std::uint8_t> encode(const train::TrainedModel& trained) {
  ParamStore tensors;
  for (const auto& p : trained.model.params()) tensors.add(p.name, p.value);
  trained.normalizer.append_to(tensors);

  const nlohmann::json cfg{{"model", config::to_json(trained.model.config())},
                           {"target", data::target_name(trained.target)}};

  io::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.string_u32(cfg.dump());
  w.u64(tensors.size());
  for (const auto& t : tensors) {
    w.string_u32(t.name);
    w.u64(t.value.rows());
    w.u64(t.value.cols());
    for (double v : t.value.data()) w.f64(v);
  }
  return w.take();
}

train::TrainedModel decode(const std::vector<std::uint8_t>& bytes, const std::string& context) {
  io::ByteReader r(bytes, context);
  if (r.bytes(kMagic.size()) != kMagic) r.fail("bad magic, expected RJCM");
  const auto version_at = r.offset();
  if (const auto version = r.u32(); version != kVersion) {
    throw FormatError(context + ": unsupported version " + std::to_string(version), version_at);
  }

  const auto cfg_at = r.offset();
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(r.string_u32());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string(context + ": config block is not JSON: ") + e.what(), cfg_at);
  }
  if (!cfg.is_object() || !cfg.contains("model") || !cfg.contains("target") ||
      !cfg["target"].is_string()) {
    throw FormatError(context + ": config block lacks model/target", cfg_at);
  }

  train::TrainedModel out;
  const ModelConfig model_cfg = config::model_config_from_json(cfg["model"]);
  out.target = data::parse_target(cfg["target"].get<std::string>());

  const std::uint64_t count = r.u64();
  ParamStore model_params;
  ParamStore norm_params;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto at = r.offset();
    std::string name = r.string_u32();
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (rows == 0 || cols == 0) {
      throw FormatError(context + ": tensor '" + name + "' has an empty shape", at);
    }
    if (cols > r.remaining() / 8 / rows) r.fail("truncated payload of tensor '" + name + "'");
    std::vector<double> values(rows * cols);
    for (auto& v : values) v = r.f64();
    Tensor t;
    try {
      t = Tensor(rows, cols, std::move(values));
    } catch (const NumericalError& e) {
      throw FormatError(context + ": tensor '" + name + "': " + e.what(), at);
    }
    try {
      (is_norm(name) ? norm_params : model_params).add(std::move(name), std::move(t));
    } catch (const ConfigError& e) {
      throw FormatError(context + ": " + e.what(), at);
    }
  }
  if (r.remaining() != 0) r.fail("trailing bytes after the last tensor");

  out.model = RjcmaModel::from_params(model_cfg, model_params);
  out.normalizer = data::Normalizer::from_store(norm_params);
  for (std::size_t m = 0; m < 3; ++m) {
    if (out.normalizer.scale()[m].rows() != model_cfg.fusion.dim(static_cast<fusion::Modality>(m))) {
      throw DimensionError(context + ": normaliser dims do not match the model config");
    }
  }
  return out;
}

void save(const std::filesystem::path& path, const train::TrainedModel& trained) {
  io::write_file(path, encode(trained));
}

train::TrainedModel load(const std::filesystem::path& path) {
  return decode(io::read_file(path), path.string());
}

}  // namespace rjcma::checkpoint
