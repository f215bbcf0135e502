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

#include "rjcma/commands.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "binary_io.hpp"
#include "rjcma/checkpoint.hpp"
#include "rjcma/data.hpp"
#include "rjcma/errors.hpp"

namespace rjcma::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kUsage;
  if (dynamic_cast<const NumericalError*>(&e)) return kNumericalError;
  return kDataError;
}

fs::path make_run_dir(const fs::path& out, const std::string& verb) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream stamp;
  stamp << std::put_time(&utc, "%Y%m%d-%H%M%S") << '-' << verb;

  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  for (int suffix = 0;; ++suffix) {
    fs::path dir = out / (suffix == 0 ? stamp.str() : stamp.str() + "-" + std::to_string(suffix));
    if (fs::create_directory(dir, ec)) return dir;
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  }
}

namespace {

void write_json(const fs::path& path, const json& j) { io::write_text_file(path, j.dump(2) + "\n"); }

void echo_config(const fs::path& dir, const config::RunConfig& cfg) {
  write_json(dir / "config.json", config::to_json(cfg));
}

struct Split {
  std::vector<data::SequenceRecord> train;
  std::vector<data::SequenceRecord> val;
  std::vector<data::SequenceRecord> all;
  std::vector<bool> is_val;
};

Split load_split(const config::RunConfig& cfg) {
  if (cfg.manifest.empty()) throw ConfigError("no manifest given (--manifest or \"manifest\" in the config)");
  std::vector<data::ManifestEntry> entries;
  Split s;
  s.all = data::load_manifest_records(cfg.manifest, &entries);
  for (std::size_t i = 0; i < s.all.size(); ++i) {
    const bool val = entries[i].split == "val";
    s.is_val.push_back(val);
    (val ? s.val : s.train).push_back(s.all[i]);
  }
  return s;
}

std::array<std::size_t, 3> feature_dims(const std::vector<data::SequenceRecord>& records) {
  if (records.empty()) throw InsufficientDataError("manifest lists no sequences");
  std::array<std::size_t, 3> dims{};
  for (std::size_t m = 0; m < 3; ++m) dims[m] = records.front().features[m].rows();
  for (const auto& r : records) {
    for (std::size_t m = 0; m < 3; ++m) {
      if (r.features[m].rows() != dims[m]) {
        throw DimensionError("sequence " + r.id + " has " + fusion::modality_name(static_cast<fusion::Modality>(m)) +
                             " dim " + std::to_string(r.features[m].rows()) + ", expected " +
                             std::to_string(dims[m]));
      }
    }
  }
  return dims;
}

train::EpochCallback progress(std::ostream& log, data::Target t) {
  return [&log, t](const train::EpochRecord& r) {
    log << data::target_name(t) << " epoch " << r.epoch << "  loss " << std::fixed << std::setprecision(4)
        << r.train_loss << "  val_ccc " << r.val_ccc << std::scientific << std::setprecision(2) << "  lr "
        << r.lr << std::defaultfloat << '\n';
  };
}

json table_report(const std::string& command, const config::RunConfig& cfg, const train::ResultTable& t) {
  json j = t.to_json();
  j["command"] = command;
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace

fs::path cmd_gen(const config::RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.data.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError("cannot create output directory " + out_dir.string() + (ec ? ": " + ec.message() : ""));
  }
  const auto records = data::generate_synthetic(cfg.data, config::derive_seed(cfg.seed, 0));
  const auto folds = data::make_folds(records.size(), cfg.n_folds, config::derive_seed(cfg.seed, 3));

  std::vector<data::ManifestEntry> entries;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::string file = records[i].id + ".mmf";
    data::write_features(out_dir / file, records[i]);
    entries.push_back({records[i].id, file, folds[i] == 0 ? "val" : "train"});
  }
  const fs::path manifest = out_dir / "manifest.json";
  data::write_manifest(manifest, entries);
  log << "wrote " << records.size() << " sequences and " << manifest.string() << '\n';
  return manifest;
}

TrainRun cmd_train(const config::RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Split split = load_split(cfg);
  const auto exp = cfg.experiment(feature_dims(split.all));

  TrainRun run;
  run.run_dir = make_run_dir(cfg.out, "train");
  echo_config(run.run_dir, cfg);

  json best = json::object();
  for (data::Target t : cfg.targets()) {
    auto outcome = train::train_target(split.train, split.val, t, exp, progress(log, t));
    const std::string name = data::target_name(t);
    checkpoint::save(run.run_dir / ("checkpoint_" + name + ".rjcm"), outcome.trained);
    io::write_text_file(run.run_dir / ("history_" + name + ".csv"), train::history_csv(outcome.history));
    best[name] = {{"best_epoch", outcome.best_epoch}, {"best_val_ccc", outcome.best_val_ccc}};
    (t == data::Target::kValence ? run.eval.valence : run.eval.arousal) = std::move(outcome.val_eval);
  }

  json report = run.eval.to_json();
  report["command"] = "train";
  report["split"] = "val";
  report["training"] = best;
  write_json(run.run_dir / "report.json", report);
  log << run.eval.to_text() << "run directory: " << run.run_dir.string() << '\n';
  return run;
}

TrainRun cmd_eval(const config::RunConfig& cfg, const std::vector<fs::path>& checkpoints,
                  const std::string& split_name, std::ostream& log) {
  if (checkpoints.empty()) throw ConfigError("eval: no --checkpoint given");
  if (split_name != "train" && split_name != "val") {
    throw ConfigError("eval: split must be train or val, got '" + split_name + "'");
  }
  const Split split = load_split(cfg);
  const auto& records = split_name == "val" ? split.val : split.train;
  if (records.empty()) throw InsufficientDataError("eval: manifest has no " + split_name + " sequences");
  const auto dims = feature_dims(split.all);

  TrainRun run;
  for (const auto& path : checkpoints) {
    const train::TrainedModel trained = checkpoint::load(path);
    const auto& fc = trained.model.config().fusion;
    if (fc.d_audio != dims[0] || fc.d_visual != dims[1] || fc.d_text != dims[2]) {
      throw DimensionError("checkpoint " + path.string() + " expects feature dims (" + std::to_string(fc.d_audio) +
                           ", " + std::to_string(fc.d_visual) + ", " + std::to_string(fc.d_text) +
                           ") but the manifest data has (" + std::to_string(dims[0]) + ", " +
                           std::to_string(dims[1]) + ", " + std::to_string(dims[2]) + ")");
    }
    auto& slot = trained.target == data::Target::kValence ? run.eval.valence : run.eval.arousal;
    if (slot) throw ConfigError(std::string("eval: two checkpoints for ") + data::target_name(trained.target));
    slot = metrics::evaluate(trained.model, trained.normalizer.apply(records), trained.target);
  }

  run.run_dir = make_run_dir(cfg.out, "eval");
  echo_config(run.run_dir, cfg);
  json report = run.eval.to_json();
  report["command"] = "eval";
  report["split"] = split_name;
  write_json(run.run_dir / "report.json", report);
  log << run.eval.to_text() << "run directory: " << run.run_dir.string() << '\n';
  return run;
}

ad::GradCheckReport run_gradcheck(const config::GradcheckConfig& gc, const GradcheckOptions& opts) {
  ModelConfig mc;
  mc.fusion.d_audio = mc.fusion.d_visual = mc.fusion.d_text = gc.dim;
  mc.fusion.frames = gc.frames;
  mc.fusion.iterations = gc.iterations;
  mc.tcn_enabled = gc.tcn_enabled;
  mc.init.attention_scale = gc.attention_init_scale;
  mc.validate();
  const RjcmaModel model = RjcmaModel::create(mc, gc.seed);

  std::mt19937_64 rng(config::derive_seed(gc.seed, 4));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<Tensor, 3> inputs;
  for (auto& x : inputs) {
    x = Tensor(gc.dim, gc.frames);
    for (double& v : x.data()) v = normal(rng);
  }
  std::vector<double> gt(gc.frames);
  for (double& v : gt) v = std::tanh(normal(rng));

  const ad::LossFn loss = [&](ad::Tape& tape, std::span<const ad::Var> bound) {
    ad::Var pred = model.forward(tape, bound, inputs).predictions;
    if (opts.output_hook) pred = opts.output_hook(tape, pred);
    return metrics::ccc_loss(pred, gt);
  };
  return ad::grad_check(loss, model.params(), gc.step, gc.tolerance);
}

GradcheckRun cmd_gradcheck(const config::RunConfig& cfg, std::ostream& log, const GradcheckOptions& opts) {
  GradcheckRun run;
  run.report = run_gradcheck(cfg.gradcheck, opts);
  ad::print_report(log, run.report);

  json entries = json::array();
  for (const auto& e : run.report.entries) {
    entries.push_back({{"name", e.name},
                       {"rows", e.shape.rows},
                       {"cols", e.shape.cols},
                       {"max_rel_error", e.max_rel_error},
                       {"max_abs_error", e.max_abs_error},
                       {"worst_index", e.worst_index},
                       {"worst_analytic", e.worst_analytic},
                       {"worst_numeric", e.worst_numeric}});
  }
  run.run_dir = make_run_dir(cfg.out, "gradcheck");
  echo_config(run.run_dir, cfg);
  write_json(run.run_dir / "report.json", {{"command", "gradcheck"},
                                           {"passed", run.report.passed()},
                                           {"tolerance", run.report.tolerance},
                                           {"step", run.report.step},
                                           {"max_rel_error", run.report.max_rel_error()},
                                           {"parameters", entries}});
  return run;
}

TableRun cmd_ablate(const config::RunConfig& cfg, const std::vector<std::size_t>& l_values, std::ostream& log) {
  cfg.validate();
  const Split split = load_split(cfg);
  const auto exp = cfg.experiment(feature_dims(split.all));

  TableRun run;
  run.table = train::ablate(split.train, split.val, l_values, cfg.targets(), exp);
  run.run_dir = make_run_dir(cfg.out, "ablate");
  echo_config(run.run_dir, cfg);
  write_json(run.run_dir / "report.json", table_report("ablate", cfg, run.table));
  io::write_text_file(run.run_dir / "table.md", run.table.to_markdown());
  log << run.table.to_markdown() << "run directory: " << run.run_dir.string() << '\n';
  return run;
}

TableRun cmd_cv(const config::RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Split split = load_split(cfg);
  const auto exp = cfg.experiment(feature_dims(split.all));
  const auto folds =
      data::make_folds(split.all.size(), cfg.n_folds, config::derive_seed(cfg.seed, 3), split.is_val);

  TableRun run;
  run.table = train::cross_validate(split.all, folds, cfg.n_folds, cfg.targets(), exp);
  run.run_dir = make_run_dir(cfg.out, "cv");
  echo_config(run.run_dir, cfg);
  write_json(run.run_dir / "report.json", table_report("cv", cfg, run.table));
  io::write_text_file(run.run_dir / "table.md", run.table.to_markdown());
  log << run.table.to_markdown() << "run directory: " << run.run_dir.string() << '\n';
  return run;
}

}  // namespace rjcma::cli
