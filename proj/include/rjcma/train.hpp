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
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rjcma/data.hpp"
#include "rjcma/metrics.hpp"
#include "rjcma/model.hpp"
#include "rjcma/params.hpp"

namespace rjcma::train {

struct TrainConfig {
  double lr_init = 1e-5;
  double lr_min = 1e-8;
  double weight_decay = 1e-3;
  std::size_t batch_size = 12;
  std::size_t max_epochs = 100;
  std::size_t warmup_epochs = 5;  // epochs 0..warmup_epochs-1 ramp lr within each epoch
  std::size_t plateau_patience = 5;
  double plateau_factor = 0.1;
  std::size_t early_stop_patience = 15;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;  // batch shuffling

  void validate() const;
};

/// Adam with decoupled weight decay: p <- p - lr * wd * p, then the
/// bias-corrected Adam update p <- p - lr * m_hat / (sqrt(v_hat) + eps).
class Adam {
 public:
  Adam(const ParamStore& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(ParamStore& params, const std::vector<Tensor>& grads, double lr, double weight_decay);

  std::size_t step_count() const noexcept { return steps_; }
  const std::vector<Tensor>& first_moment() const noexcept { return m_; }
  const std::vector<Tensor>& second_moment() const noexcept { return v_; }

 private:
  double beta1_, beta2_, eps_;
  std::size_t steps_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// Linear warm-up within each of the first `warmup_epochs` epochs, then
/// reduce-on-plateau on validation CCC.
class LrScheduler {
 public:
  enum class Phase { kWarmup, kPlateau };

  explicit LrScheduler(const TrainConfig& cfg);

  /// Learning rate for batch `batch` of `n_batches` in `epoch`.
  double batch_lr(std::size_t epoch, std::size_t batch, std::size_t n_batches) const;
  /// Records the epoch's validation CCC; returns the learning rate that the
  /// next plateau-phase epoch will use.
  double end_epoch(std::size_t epoch, double val_ccc);

  Phase phase() const noexcept { return phase_; }
  double lr() const noexcept { return lr_; }
  double best() const noexcept { return best_; }
  std::size_t bad_epochs() const noexcept { return bad_epochs_; }

 private:
  double lr_init_, lr_min_, factor_;
  std::size_t warmup_epochs_, patience_;
  Phase phase_;
  double lr_;
  double best_;
  std::size_t bad_epochs_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_ccc = 0.0;
  double lr = 0.0;
};

std::string history_csv(const std::vector<EpochRecord>& history);

struct FitResult {
  RjcmaModel model;  // best state
  std::vector<EpochRecord> history;
  double best_val_ccc = 0.0;
  std::size_t best_epoch = 0;
  bool early_stopped = false;
};

/// Optional per-epoch observer (progress printing).
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains `model` on windows of normalised training sequences and scores the
/// normalised validation sequences after every epoch. The best state is
/// snapshotted on improvement and reloaded at the end of every epoch.
/// Throws NumericalError on a non-finite loss.
FitResult fit(RjcmaModel model, const std::vector<data::Window>& train_windows,
              const std::vector<data::SequenceRecord>& val_records, data::Target target,
              const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Mean per-window CCC loss of a batch, on `tape`. Windows with fewer than two
/// usable frames are skipped; returns nullopt when none remain.
std::optional<ad::Var> batch_loss(const RjcmaModel& model, ad::Tape& tape,
                                  std::span<const ad::Var> bound,
                                  std::span<const data::Window* const> windows, data::Target target);

/// Frames that count in the loss: valid label and at least one modality present.
data::Mask loss_mask(const data::Window& w, data::Target target);

struct TrainedModel {
  RjcmaModel model;
  data::Normalizer normalizer;
  data::Target target = data::Target::kValence;
};

struct TrainOutcome {
  TrainedModel trained;
  std::vector<EpochRecord> history;
  double best_val_ccc = 0.0;
  std::size_t best_epoch = 0;
  metrics::TargetEval val_eval;
};

struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;
  data::WindowSpec window;
  std::uint64_t init_seed = 0;
};

/// Normalise with training statistics, window, fit, and evaluate on `val`.
TrainOutcome train_target(const std::vector<data::SequenceRecord>& train,
                          const std::vector<data::SequenceRecord>& val, data::Target target,
                          const ExperimentConfig& cfg, const EpochCallback& on_epoch = {});

/// A fold x {valence, arousal, mean} (or l x ...) result table.
struct ResultTable {
  std::string key_header;  // e.g. "Validation Set" or "Num. of recursions (l)"
  struct Row {
    std::string label;
    std::optional<double> valence;
    std::optional<double> arousal;
    std::optional<double> mean() const;
  };
  std::vector<Row> rows;

  std::string to_markdown() const;
  nlohmann::json to_json() const;
};

/// Trains one model per fold and target; fold f validates on sequences with
/// folds[i] == f and trains on the rest.
ResultTable cross_validate(const std::vector<data::SequenceRecord>& records,
                           const std::vector<std::size_t>& folds, std::size_t n_folds,
                           const std::vector<data::Target>& targets, const ExperimentConfig& cfg);

/// Trains per recursion depth on the same split, data and seeds.
ResultTable ablate(const std::vector<data::SequenceRecord>& train,
                   const std::vector<data::SequenceRecord>& val,
                   const std::vector<std::size_t>& l_values,
                   const std::vector<data::Target>& targets, const ExperimentConfig& cfg);

}  // namespace rjcma::train
