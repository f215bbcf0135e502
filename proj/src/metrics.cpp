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

#include "rjcma/metrics.hpp"

#include <iomanip>
#include <sstream>

#include "rjcma/errors.hpp"
#include "rjcma/model.hpp"

namespace rjcma::metrics {

namespace {

void check_lengths(std::size_t pred, std::size_t gt, std::size_t mask) {
  if (pred != gt) throw DimensionError("ccc: prediction and label lengths differ");
  if (mask != 0 && mask != pred) throw DimensionError("ccc: mask length differs");
}

}  // namespace

double ccc(std::span<const double> pred, std::span<const double> gt,
           std::span<const std::uint8_t> mask) {
  check_lengths(pred.size(), gt.size(), mask.size());
  std::vector<double> x, y;
  x.reserve(pred.size());
  y.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask.empty() && mask[i] == 0) continue;
    x.push_back(pred[i]);
    y.push_back(gt[i]);
  }
  const std::size_t n = x.size();
  if (n < 2) throw InsufficientDataError("ccc: needs at least 2 valid frames, got " + std::to_string(n));
  if (x == y) return 1.0;

  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double nn = static_cast<double>(n);
  const double mx = sx / nn, my = sy / nn;
  double vx = 0.0, vy = 0.0, cxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cxy += dx * dy;
  }
  vx /= nn;
  vy /= nn;
  cxy /= nn;
  const double dm = mx - my;
  return 2.0 * cxy / (vx + vy + dm * dm + kCccEpsilon);
}

ad::Var ccc_loss(const ad::Var& pred, std::span<const double> gt,
                 std::span<const std::uint8_t> mask) {
  if (pred.rows() != 1) throw DimensionError("ccc_loss: predictions must be 1 x K");
  check_lengths(pred.cols(), gt.size(), mask.size());
  std::vector<std::size_t> keep;
  std::vector<double> y;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask.empty() && mask[i] == 0) continue;
    keep.push_back(i);
    y.push_back(gt[i]);
  }
  if (keep.size() < 2) {
    throw InsufficientDataError("ccc_loss: needs at least 2 valid frames, got " +
                                std::to_string(keep.size()));
  }
  ad::Tape& tape = pred.tape();
  const std::size_t n = keep.size();
  ad::Var x = ad::gather_cols(pred, keep);
  ad::Var g = tape.constant(Tensor(1, n, std::move(y)));
  ad::Var mean_diff = ad::sub(ad::mean(x), ad::mean(g));
  ad::Var denom = ad::add_scalar(
      ad::add(ad::add(ad::variance(x), ad::variance(g)), ad::mul(mean_diff, mean_diff)), kCccEpsilon);
  ad::Var rho = ad::div(ad::scale(ad::covariance(x, g), 2.0), denom);
  return ad::add_scalar(ad::scale(rho, -1.0), 1.0);
}

std::optional<double> EvalResult::mean() const {
  if (valence && arousal) return 0.5 * (valence->ccc + arousal->ccc);
  if (valence) return valence->ccc;
  if (arousal) return arousal->ccc;
  return std::nullopt;
}

std::size_t EvalResult::n_frames() const {
  std::size_t n = 0;
  if (valence) n = std::max(n, valence->n_frames);
  if (arousal) n = std::max(n, arousal->n_frames);
  return n;
}

nlohmann::json EvalResult::to_json() const {
  using nlohmann::json;
  auto opt = [](const std::optional<TargetEval>& t) -> json {
    return t ? json(t->ccc) : json(nullptr);
  };
  json j;
  j["ccc_valence"] = opt(valence);
  j["ccc_arousal"] = opt(arousal);
  j["mean"] = mean() ? json(*mean()) : json(nullptr);
  j["n_frames"] = {{"valence", valence ? json(valence->n_frames) : json(nullptr)},
                   {"arousal", arousal ? json(arousal->n_frames) : json(nullptr)}};
  json seqs = json::array();
  const auto* base = valence ? &*valence : (arousal ? &*arousal : nullptr);
  if (base) {
    for (std::size_t i = 0; i < base->per_sequence.size(); ++i) {
      json s;
      s["id"] = base->per_sequence[i].id;
      auto add = [&](const char* key, const std::optional<TargetEval>& t) {
        if (!t) return;
        const auto& score = t->per_sequence.at(i);
        s[key] = score.ccc ? json(*score.ccc) : json(nullptr);
        s[std::string("n_frames_") + key] = score.n_frames;
      };
      add("valence", valence);
      add("arousal", arousal);
      seqs.push_back(std::move(s));
    }
  }
  j["per_sequence"] = std::move(seqs);
  return j;
}

std::string EvalResult::to_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  auto line = [&](const char* name, const std::optional<TargetEval>& t) {
    if (!t) return;
    os << name << ": CCC " << t->ccc << " over " << t->n_frames << " frames\n";
    for (const auto& s : t->per_sequence) {
      os << "  " << s.id << ": ";
      if (s.ccc) {
        os << *s.ccc;
      } else {
        os << "n/a";
      }
      os << " (" << s.n_frames << " frames)\n";
    }
  };
  line("valence", valence);
  line("arousal", arousal);
  if (auto m = mean()) os << "mean: " << *m << '\n';
  return os.str();
}

std::vector<SequencePrediction> predict_sequences(const RjcmaModel& model,
                                                  const std::vector<data::SequenceRecord>& records,
                                                  data::Target target) {
  const std::size_t k = model.config().fusion.frames;
  std::vector<SequencePrediction> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    SequencePrediction sp;
    sp.id = rec.id;
    for (const auto& w : data::eval_windows(rec, k)) {
      const Tensor pred = model.predict(w.features);
      const auto& labels = w.labels(target);
      for (std::size_t t = 0; t < w.valid_frames; ++t) {
        sp.pred.push_back(pred[t]);
        sp.gt.push_back(labels[t]);
      }
    }
    out.push_back(std::move(sp));
  }
  return out;
}

TargetEval score(const std::vector<SequencePrediction>& predictions) {
  if (predictions.empty()) throw InsufficientDataError("evaluate: empty partition");
  TargetEval result;
  std::vector<double> all_pred, all_gt;
  for (const auto& sp : predictions) {
    SequenceScore s;
    s.id = sp.id;
    std::vector<double> p, g;
    for (std::size_t i = 0; i < sp.gt.size(); ++i) {
      if (sp.gt[i] == data::kInvalidLabel) continue;
      p.push_back(sp.pred[i]);
      g.push_back(sp.gt[i]);
    }
    s.n_frames = p.size();
    if (p.size() >= 2) s.ccc = ccc(p, g);
    all_pred.insert(all_pred.end(), p.begin(), p.end());
    all_gt.insert(all_gt.end(), g.begin(), g.end());
    result.per_sequence.push_back(std::move(s));
  }
  result.n_frames = all_pred.size();
  result.ccc = ccc(all_pred, all_gt);
  return result;
}

TargetEval evaluate(const RjcmaModel& model, const std::vector<data::SequenceRecord>& records,
                    data::Target target) {
  return score(predict_sequences(model, records, target));
}

}  // namespace rjcma::metrics
