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
#include <exception>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rjcma/config.hpp"
#include "rjcma/grad_check.hpp"
#include "rjcma/metrics.hpp"
#include "rjcma/train.hpp"

namespace rjcma::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericalError = 3 };

/// Maps a library exception to the process exit code.
int exit_code_for(const std::exception& e);

/// Creates `<out>/<UTC timestamp>-<verb>`; a numeric suffix is appended when
/// that directory already exists, so earlier runs are never overwritten.
std::filesystem::path make_run_dir(const std::filesystem::path& out, const std::string& verb);

/// Writes one MMF1 file per synthetic sequence plus manifest.json into
/// `out_dir`. Fold 0 of make_folds(n, n_folds) is marked "val".
std::filesystem::path cmd_gen(const config::RunConfig& cfg, const std::filesystem::path& out_dir,
                              std::ostream& log);

struct TrainRun {
  std::filesystem::path run_dir;
  metrics::EvalResult eval;
};

/// Trains one model per target on the manifest's train split and validates on
/// its val split. Writes config.json, checkpoint_<target>.rjcm,
/// history_<target>.csv and report.json.
TrainRun cmd_train(const config::RunConfig& cfg, std::ostream& log);

/// Scores checkpoints on one split of the manifest; writes report.json.
TrainRun cmd_eval(const config::RunConfig& cfg, const std::vector<std::filesystem::path>& checkpoints,
                  const std::string& split, std::ostream& log);

struct GradcheckOptions {
  /// Applied to the predictions before the loss. Lets tests splice in an op
  /// with a deliberately wrong backward rule.
  std::function<ad::Var(ad::Tape&, const ad::Var&)> output_hook;
};

/// Full model (TCN + recursive fusion + head) with the CCC loss on random
/// inputs at the gradcheck dims.
ad::GradCheckReport run_gradcheck(const config::GradcheckConfig& gc,
                                  const GradcheckOptions& opts = {});

struct GradcheckRun {
  std::filesystem::path run_dir;
  ad::GradCheckReport report;
};

GradcheckRun cmd_gradcheck(const config::RunConfig& cfg, std::ostream& log,
                           const GradcheckOptions& opts = {});

struct TableRun {
  std::filesystem::path run_dir;
  train::ResultTable table;
};

/// One training per recursion depth on the manifest's train/val split.
TableRun cmd_ablate(const config::RunConfig& cfg, const std::vector<std::size_t>& l_values,
                    std::ostream& log);

/// Cross-validation over all manifest sequences; fold 0 is the manifest's
/// val split.
TableRun cmd_cv(const config::RunConfig& cfg, std::ostream& log);

}  // namespace rjcma::cli
