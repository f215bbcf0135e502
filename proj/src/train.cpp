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

#include "rjcma/train.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "rjcma/errors.hpp"

namespace rjcma::train {

void TrainConfig::validate() const {
  if (!(lr_min > 0.0) || !(lr_init >= lr_min)) throw ConfigError("train: need 0 < lr_min <= lr_init");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) {
    throw ConfigError("train: plateau_factor must be in (0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be >= 0");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (max_epochs == 0) throw ConfigError("train: max_epochs must be positive");
  if (plateau_patience == 0 || early_stop_patience == 0) {
    throw ConfigError("train: patience values must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw ConfigError("train: invalid Adam hyper-parameters");
  }
}

Adam::Adam(const ParamStore& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params) {
    m_.emplace_back(p.value.rows(), p.value.cols());
    v_.emplace_back(p.value.rows(), p.value.cols());
  }
}

void Adam::step(ParamStore& params, const std::vector<Tensor>& grads, double lr,
                double weight_decay) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw DimensionError("adam: parameter/gradient count mismatch");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  for (std::size_t i = 0; i < m_.size(); ++i) {
    Tensor& w = params[i].value;
    const Tensor& g = grads[i];
    if (g.shape() != w.shape() || m_[i].shape() != w.shape()) {
      throw DimensionError("adam: shape mismatch for '" + params[i].name + "'");
    }
    auto pw = w.data();
    auto pg = g.data();
    auto pm = m_[i].data();
    auto pv = v_[i].data();
    for (std::size_t k = 0; k < pw.size(); ++k) {
      if (weight_decay != 0.0) pw[k] -= lr * weight_decay * pw[k];
      pm[k] = beta1_ * pm[k] + (1.0 - beta1_) * pg[k];
      pv[k] = beta2_ * pv[k] + (1.0 - beta2_) * pg[k] * pg[k];
      const double m_hat = pm[k] / c1;
      const double v_hat = pv[k] / c2;
      pw[k] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

LrScheduler::LrScheduler(const TrainConfig& cfg)
    : lr_init_(cfg.lr_init),
      lr_min_(cfg.lr_min),
      factor_(cfg.plateau_factor),
      warmup_epochs_(cfg.warmup_epochs),
      patience_(cfg.plateau_patience),
      phase_(cfg.warmup_epochs > 0 ? Phase::kWarmup : Phase::kPlateau),
      lr_(cfg.warmup_epochs > 0 ? cfg.lr_min : cfg.lr_init),
      best_(-std::numeric_limits<double>::infinity()) {}

double LrScheduler::batch_lr(std::size_t epoch, std::size_t batch, std::size_t n_batches) const {
  if (epoch < warmup_epochs_ && n_batches > 0) {
    const double frac = static_cast<double>(batch + 1) / static_cast<double>(n_batches);
    return lr_min_ + (lr_init_ - lr_min_) * frac;
  }
  return lr_;
}

double LrScheduler::end_epoch(std::size_t epoch, double val_ccc) {
  const bool improved = val_ccc > best_;
  if (improved) best_ = val_ccc;
  if (epoch < warmup_epochs_) {
    if (epoch + 1 == warmup_epochs_) {
      phase_ = Phase::kPlateau;
      lr_ = lr_init_;
    }
    return lr_init_;
  }
  phase_ = Phase::kPlateau;
  if (improved) {
    bad_epochs_ = 0;
  } else if (++bad_epochs_ >= patience_) {
    lr_ = std::max(lr_ * factor_, lr_min_);
    bad_epochs_ = 0;
  }
  return lr_;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,train_loss,val_ccc,lr\n";
  os << std::setprecision(17);
  for (const auto& h : history) {
    os << h.epoch << ',' << h.train_loss << ',' << h.val_ccc << ',' << h.lr << '\n';
  }
  return os.str();
}

data::Mask loss_mask(const data::Window& w, data::Target target) {
  const auto masks = data::build_masks(w);
  data::Mask out = masks.label(target);
  for (std::size_t t = 0; t < out.size(); ++t) {
    const bool any_modality = masks.frame[0][t] || masks.frame[1][t] || masks.frame[2][t];
    if (!any_modality) out[t] = 0;
  }
  return out;
}

namespace {

std::size_t count_valid(const data::Mask& m) {
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
}

}  // namespace

std::optional<ad::Var> batch_loss(const RjcmaModel& model, ad::Tape& tape,
                                  std::span<const ad::Var> bound,
                                  std::span<const data::Window* const> windows, data::Target target) {
  std::optional<ad::Var> total;
  std::size_t used = 0;
  for (const data::Window* w : windows) {
    const data::Mask mask = loss_mask(*w, target);
    if (count_valid(mask) < 2) continue;
    auto out = model.forward(tape, bound, w->features);
    ad::Var loss = metrics::ccc_loss(out.predictions, w->labels(target), mask);
    total = total ? ad::add(*total, loss) : loss;
    ++used;
  }
  if (!total) return std::nullopt;
  return ad::scale(*total, 1.0 / static_cast<double>(used));
}

FitResult fit(RjcmaModel model, const std::vector<data::Window>& train_windows,
              const std::vector<data::SequenceRecord>& val_records, data::Target target,
              const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_windows.empty()) throw InsufficientDataError("fit: empty training partition");
  if (val_records.empty()) throw InsufficientDataError("fit: empty validation partition");

  std::vector<const data::Window*> order;
  for (const auto& w : train_windows) {
    if (count_valid(loss_mask(w, target)) >= 2) order.push_back(&w);
  }
  if (order.empty()) throw InsufficientDataError("fit: no training window has 2 valid frames");

  std::mt19937_64 rng(cfg.seed);
  Adam adam(model.params(), cfg.beta1, cfg.beta2, cfg.adam_eps);
  LrScheduler scheduler(cfg);
  FitResult result;
  result.best_val_ccc = -std::numeric_limits<double>::infinity();
  ParamStore best = model.params();
  std::size_t since_best = 0;
  const std::size_t n_batches = (order.size() + cfg.batch_size - 1) / cfg.batch_size;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    double lr = scheduler.lr();
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t begin = b * cfg.batch_size;
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::span<const data::Window* const> batch(order.data() + begin, end - begin);
      lr = scheduler.batch_lr(epoch, b, n_batches);

      ad::Tape tape;
      auto bound = model.bind(tape);
      auto loss = batch_loss(model, tape, bound, batch, target);
      if (!loss) continue;
      const double value = loss->value()[0];
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch " << b << " (lr " << lr
            << ")";
        throw NumericalError(msg.str());
      }
      tape.backward(*loss);
      std::vector<Tensor> grads;
      grads.reserve(bound.size());
      for (const auto& v : bound) grads.push_back(tape.grad(v));
      adam.step(model.params(), grads, lr, cfg.weight_decay);
      loss_sum += value;
      ++loss_count;
    }

    const double val_ccc = metrics::evaluate(model, val_records, target).ccc;
    if (!std::isfinite(val_ccc)) {
      throw NumericalError("non-finite validation CCC at epoch " + std::to_string(epoch));
    }
    EpochRecord rec{epoch, loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0, val_ccc, lr};
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    scheduler.end_epoch(epoch, val_ccc);

    if (val_ccc > result.best_val_ccc) {
      result.best_val_ccc = val_ccc;
      result.best_epoch = epoch;
      best = model.params();
      since_best = 0;
    } else {
      ++since_best;
    }
    // Every epoch continues from the best state seen so far.
    model.params() = best;
    if (since_best >= cfg.early_stop_patience) {
      result.early_stopped = true;
      break;
    }
  }
  result.model = std::move(model);
  return result;
}

TrainOutcome train_target(const std::vector<data::SequenceRecord>& train,
                          const std::vector<data::SequenceRecord>& val, data::Target target,
                          const ExperimentConfig& cfg, const EpochCallback& on_epoch) {
  if (train.empty() || val.empty()) throw InsufficientDataError("train: empty partition");
  const data::Normalizer normalizer = data::Normalizer::fit(train);
  const auto train_norm = normalizer.apply(train);
  const auto val_norm = normalizer.apply(val);

  ModelConfig model_cfg = cfg.model;
  model_cfg.fusion.frames = cfg.window.length;
  std::vector<data::Window> windows;
  for (const auto& rec : train_norm) {
    auto ws = data::window(rec, cfg.window);
    std::move(ws.begin(), ws.end(), std::back_inserter(windows));
  }
  RjcmaModel model = RjcmaModel::create(model_cfg, cfg.init_seed);
  FitResult fitted = fit(std::move(model), windows, val_norm, target, cfg.train, on_epoch);

  TrainOutcome out;
  out.val_eval = metrics::evaluate(fitted.model, val_norm, target);
  out.trained = TrainedModel{std::move(fitted.model), normalizer, target};
  out.history = std::move(fitted.history);
  out.best_val_ccc = fitted.best_val_ccc;
  out.best_epoch = fitted.best_epoch;
  return out;
}

std::optional<double> ResultTable::Row::mean() const {
  if (valence && arousal) return 0.5 * (*valence + *arousal);
  return std::nullopt;
}

std::string ResultTable::to_markdown() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  auto cell = [&](const std::optional<double>& v) {
    if (v) {
      os << *v;
    } else {
      os << '-';
    }
  };
  os << "| " << key_header << " | Valence | Arousal | Mean |\n";
  os << "|---|---|---|---|\n";
  for (const auto& r : rows) {
    os << "| " << r.label << " | ";
    cell(r.valence);
    os << " | ";
    cell(r.arousal);
    os << " | ";
    cell(r.mean());
    os << " |\n";
  }
  return os.str();
}

nlohmann::json ResultTable::to_json() const {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"label", r.label},
                         {"valence", opt(r.valence)},
                         {"arousal", opt(r.arousal)},
                         {"mean", opt(r.mean())}});
  }
  return json{{"columns", {key_header, "Valence", "Arousal", "Mean"}}, {"rows", rows_json}};
}

namespace {

void set_target(ResultTable::Row& row, data::Target t, double v) {
  (t == data::Target::kValence ? row.valence : row.arousal) = v;
}

}  // namespace

ResultTable cross_validate(const std::vector<data::SequenceRecord>& records,
                           const std::vector<std::size_t>& folds, std::size_t n_folds,
                           const std::vector<data::Target>& targets, const ExperimentConfig& cfg) {
  if (folds.size() != records.size()) throw DimensionError("cross_validate: fold vector size");
  ResultTable table;
  table.key_header = "Validation Set";
  for (std::size_t f = 0; f < n_folds; ++f) {
    std::vector<data::SequenceRecord> train, val;
    for (std::size_t i = 0; i < records.size(); ++i) {
      (folds[i] == f ? val : train).push_back(records[i]);
    }
    ResultTable::Row row;
    row.label = "Fold " + std::to_string(f);
    for (data::Target t : targets) {
      set_target(row, t, train_target(train, val, t, cfg).best_val_ccc);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

ResultTable ablate(const std::vector<data::SequenceRecord>& train,
                   const std::vector<data::SequenceRecord>& val,
                   const std::vector<std::size_t>& l_values,
                   const std::vector<data::Target>& targets, const ExperimentConfig& cfg) {
  if (l_values.empty()) throw ConfigError("ablate: no recursion depths given");
  ResultTable table;
  table.key_header = "Num. of recursions (l)";
  for (std::size_t l : l_values) {
    ExperimentConfig run = cfg;
    run.model.fusion.iterations = l;
    ResultTable::Row row;
    row.label = "l = " + std::to_string(l);
    for (data::Target t : targets) {
      set_target(row, t, train_target(train, val, t, run).best_val_ccc);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace rjcma::train
