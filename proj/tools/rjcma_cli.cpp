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

// rjcma: generate synthetic data, train, evaluate, gradient-check, ablate
// and cross-validate the recursive joint cross-modal attention model.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rjcma/commands.hpp"
#include "rjcma/errors.hpp"

namespace {

using rjcma::config::RunConfig;

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> target;
  std::optional<std::size_t> iterations;
  std::optional<std::string> manifest;
  std::optional<std::size_t> folds;
  std::vector<std::string> overrides;
};

RunConfig effective_config(const GlobalFlags& g) {
  nlohmann::json j = rjcma::config::to_json(g.config_path.empty() ? RunConfig{} : rjcma::config::load(g.config_path));
  for (const auto& o : g.overrides) rjcma::config::apply_override(j, o);
  if (g.seed) j["seed"] = *g.seed;
  if (g.out) j["out"] = *g.out;
  if (g.target) j["target"] = *g.target;
  if (g.iterations) j["model"]["iterations"] = *g.iterations;
  if (g.manifest) j["manifest"] = *g.manifest;
  if (g.folds) j["n_folds"] = *g.folds;
  RunConfig cfg = rjcma::config::from_json(j);
  if (cfg.target != "both") (void)rjcma::data::parse_target(cfg.target);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive joint cross-modal attention: training and verification tools"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config_path, "JSON run config")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Run seed");
  app.add_option("--out", g.out, "Output root (gen: dataset directory)");
  app.add_option("--target", g.target, "valence, arousal or both")
      ->check(CLI::IsMember({"valence", "arousal", "both"}));
  app.add_option("--iterations", g.iterations, "Recursion depth l")->check(CLI::PositiveNumber);
  app.add_option("--manifest", g.manifest, "Dataset manifest.json");
  app.add_option("--set", g.overrides, "Config override key.path=value (repeatable)");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset and manifest");
  auto* train = app.add_subcommand("train", "Train one model per target");

  auto* eval = app.add_subcommand("eval", "Score checkpoints on a manifest split");
  std::vector<std::string> checkpoints;
  std::string split = "val";
  eval->add_option("--checkpoint", checkpoints, "Checkpoint file (repeat for both targets)")->required();
  eval->add_option("--split", split, "train or val")->check(CLI::IsMember({"train", "val"}));

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every parameter gradient");

  auto* ablate = app.add_subcommand("ablate", "Train across recursion depths");
  std::vector<std::size_t> l_values{1, 2, 3, 4};
  ablate->add_option("--l-values", l_values, "Recursion depths")->delimiter(',');

  auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
  cv->add_option("--folds", g.folds, "Number of folds")->check(CLI::Range(2, 1000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return rjcma::cli::kUsage;
  }

  try {
    const RunConfig cfg = effective_config(g);
    if (gen->parsed()) {
      rjcma::cli::cmd_gen(cfg, cfg.out, std::cout);
    } else if (train->parsed()) {
      rjcma::cli::cmd_train(cfg, std::cout);
    } else if (eval->parsed()) {
      rjcma::cli::cmd_eval(cfg, {checkpoints.begin(), checkpoints.end()}, split, std::cout);
    } else if (gradcheck->parsed()) {
      const auto run = rjcma::cli::cmd_gradcheck(cfg, std::cout);
      std::cout << "run directory: " << run.run_dir.string() << '\n';
      return run.report.passed() ? rjcma::cli::kOk : rjcma::cli::kNumericalError;
    } else if (ablate->parsed()) {
      rjcma::cli::cmd_ablate(cfg, l_values, std::cout);
    } else if (cv->parsed()) {
      rjcma::cli::cmd_cv(cfg, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rjcma::cli::exit_code_for(e);
  }
  return rjcma::cli::kOk;
}
