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

#include "rjcma/config.hpp"

#include <set>

#include "binary_io.hpp"
#include "rjcma/errors.hpp"

namespace rjcma::config {

using nlohmann::json;

namespace {

/// Reads known keys from a JSON object and rejects everything else.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    known_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        const bool non_negative = it->is_number_unsigned() || (it->is_number_integer() && it->template get<std::int64_t>() >= 0);
        if (!non_negative) throw ConfigError("expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw ConfigError("expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError("expected a string");
      }
      out = it->template get<T>();
    } catch (const std::exception& e) {
      throw ConfigError(where() + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    known_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string child_path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!known_.count(it.key())) throw ConfigError("unknown config key: " + child_path(it.key().c_str()));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

json to_json(const data::SyntheticConfig& c) {
  return json{{"n_sequences", c.n_sequences},
              {"min_frames", c.min_frames},
              {"max_frames", c.max_frames},
              {"dims", c.dims},
              {"latent_step", c.latent_step},
              {"nuisance_dim", c.nuisance_dim},
              {"nuisance_scale", c.nuisance_scale},
              {"noise", c.noise},
              {"dropout", c.dropout},
              {"latent_gain", c.latent_gain},
              {"label_dropout", c.label_dropout},
              {"label_map", c.label_map},
              {"fps", c.fps}};
}

void from_json(const json& j, const std::string& path, data::SyntheticConfig& c) {
  ObjectReader r(j, path);
  r.get("n_sequences", c.n_sequences);
  r.get("min_frames", c.min_frames);
  r.get("max_frames", c.max_frames);
  r.get("dims", c.dims);
  r.get("latent_step", c.latent_step);
  r.get("nuisance_dim", c.nuisance_dim);
  r.get("nuisance_scale", c.nuisance_scale);
  r.get("noise", c.noise);
  r.get("dropout", c.dropout);
  r.get("latent_gain", c.latent_gain);
  r.get("label_dropout", c.label_dropout);
  r.get("label_map", c.label_map);
  r.get("fps", c.fps);
  r.finish();
}

json to_json(const train::TrainConfig& c) {
  return json{{"lr_init", c.lr_init},
              {"lr_min", c.lr_min},
              {"weight_decay", c.weight_decay},
              {"batch_size", c.batch_size},
              {"max_epochs", c.max_epochs},
              {"warmup_epochs", c.warmup_epochs},
              {"plateau_patience", c.plateau_patience},
              {"plateau_factor", c.plateau_factor},
              {"early_stop_patience", c.early_stop_patience},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam_eps", c.adam_eps}};
}

void from_json(const json& j, const std::string& path, train::TrainConfig& c) {
  ObjectReader r(j, path);
  r.get("lr_init", c.lr_init);
  r.get("lr_min", c.lr_min);
  r.get("weight_decay", c.weight_decay);
  r.get("batch_size", c.batch_size);
  r.get("max_epochs", c.max_epochs);
  r.get("warmup_epochs", c.warmup_epochs);
  r.get("plateau_patience", c.plateau_patience);
  r.get("plateau_factor", c.plateau_factor);
  r.get("early_stop_patience", c.early_stop_patience);
  r.get("beta1", c.beta1);
  r.get("beta2", c.beta2);
  r.get("adam_eps", c.adam_eps);
  r.finish();
}

json to_json(const ModelSection& c) {
  return json{{"iterations", c.iterations},
              {"tcn_enabled", c.tcn_enabled},
              {"tcn_blocks", c.tcn_blocks},
              {"tcn_kernel", c.tcn_kernel},
              {"attention_init_scale", c.attention_init_scale}};
}

void from_json(const json& j, const std::string& path, ModelSection& c) {
  ObjectReader r(j, path);
  r.get("iterations", c.iterations);
  r.get("tcn_enabled", c.tcn_enabled);
  r.get("tcn_blocks", c.tcn_blocks);
  r.get("tcn_kernel", c.tcn_kernel);
  r.get("attention_init_scale", c.attention_init_scale);
  r.finish();
}

json to_json(const GradcheckConfig& c) {
  return json{{"dim", c.dim},
              {"frames", c.frames},
              {"iterations", c.iterations},
              {"tcn_enabled", c.tcn_enabled},
              {"step", c.step},
              {"tolerance", c.tolerance},
              {"attention_init_scale", c.attention_init_scale},
              {"seed", c.seed}};
}

void from_json(const json& j, const std::string& path, GradcheckConfig& c) {
  ObjectReader r(j, path);
  r.get("dim", c.dim);
  r.get("frames", c.frames);
  r.get("iterations", c.iterations);
  r.get("tcn_enabled", c.tcn_enabled);
  r.get("step", c.step);
  r.get("tolerance", c.tolerance);
  r.get("attention_init_scale", c.attention_init_scale);
  r.get("seed", c.seed);
  r.finish();
}

}  // namespace

std::vector<data::Target> RunConfig::targets() const {
  if (target == "both") return {data::Target::kValence, data::Target::kArousal};
  return {data::parse_target(target)};
}

ModelConfig RunConfig::model_config(const std::array<std::size_t, 3>& dims) const {
  ModelConfig m;
  m.fusion.d_audio = dims[0];
  m.fusion.d_visual = dims[1];
  m.fusion.d_text = dims[2];
  m.fusion.frames = window.length;
  m.fusion.iterations = model.iterations;
  m.tcn_enabled = model.tcn_enabled;
  m.tcn_blocks = model.tcn_blocks;
  m.tcn_kernel = model.tcn_kernel;
  m.init.attention_scale = model.attention_init_scale;
  return m;
}

train::ExperimentConfig RunConfig::experiment(const std::array<std::size_t, 3>& dims) const {
  train::ExperimentConfig e;
  e.model = model_config(dims);
  e.train = train;
  e.train.seed = derive_seed(seed, 2);
  e.window = window;
  e.init_seed = derive_seed(seed, 1);
  return e;
}

void RunConfig::validate() const {
  (void)targets();
  data.validate();
  window.validate();
  train.validate();
  model_config(data.dims).validate();
  if (n_folds < 2) throw ConfigError("n_folds must be >= 2");
  if (gradcheck.dim == 0 || gradcheck.frames < 2 || gradcheck.iterations == 0) {
    throw ConfigError("gradcheck: need dim >= 1, frames >= 2 and iterations >= 1");
  }
  if (!(gradcheck.step > 0.0) || !(gradcheck.tolerance > 0.0)) {
    throw ConfigError("gradcheck: step and tolerance must be positive");
  }
}

json to_json(const RunConfig& c) {
  return json{{"seed", c.seed},
              {"target", c.target},
              {"out", c.out},
              {"manifest", c.manifest},
              {"n_folds", c.n_folds},
              {"data", to_json(c.data)},
              {"window", {{"length", c.window.length}, {"stride", c.window.stride}}},
              {"model", to_json(c.model)},
              {"train", to_json(c.train)},
              {"gradcheck", to_json(c.gradcheck)}};
}

RunConfig from_json(const json& j) {
  RunConfig c;
  ObjectReader r(j, "");
  r.get("seed", c.seed);
  r.get("target", c.target);
  r.get("out", c.out);
  r.get("manifest", c.manifest);
  r.get("n_folds", c.n_folds);
  if (const json* s = r.child("data")) from_json(*s, "data", c.data);
  if (const json* s = r.child("window")) {
    ObjectReader w(*s, "window");
    w.get("length", c.window.length);
    w.get("stride", c.window.stride);
    w.finish();
  }
  if (const json* s = r.child("model")) from_json(*s, "model", c.model);
  if (const json* s = r.child("train")) from_json(*s, "train", c.train);
  if (const json* s = r.child("gradcheck")) from_json(*s, "gradcheck", c.gradcheck);
  r.finish();
  c.validate();
  return c;
}

RunConfig load(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    json& next = (*node)[key];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ConfigError("override '" + assignment + "': " + key + " is not a section");
    node = &next;
    start = dot + 1;
  }
}

json to_json(const ModelConfig& c) {
  return json{{"d_audio", c.fusion.d_audio},
              {"d_visual", c.fusion.d_visual},
              {"d_text", c.fusion.d_text},
              {"frames", c.fusion.frames},
              {"iterations", c.fusion.iterations},
              {"tcn_enabled", c.tcn_enabled},
              {"tcn_blocks", c.tcn_blocks},
              {"tcn_kernel", c.tcn_kernel},
              {"attention_init_scale", c.init.attention_scale}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  ObjectReader r(j, "model");
  r.get("d_audio", c.fusion.d_audio);
  r.get("d_visual", c.fusion.d_visual);
  r.get("d_text", c.fusion.d_text);
  r.get("frames", c.fusion.frames);
  r.get("iterations", c.fusion.iterations);
  r.get("tcn_enabled", c.tcn_enabled);
  r.get("tcn_blocks", c.tcn_blocks);
  r.get("tcn_kernel", c.tcn_kernel);
  r.get("attention_init_scale", c.init.attention_scale);
  r.finish();
  c.validate();
  return c;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace rjcma::config
