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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "rjcma/errors.hpp"
#include "rjcma/train.hpp"

using namespace rjcma;
using namespace rjcma::train;

namespace {

ParamStore small_store(std::mt19937_64& rng) {
  ParamStore s;
  s.add("a", testing::random_tensor(2, 3, rng));
  s.add("b", testing::random_tensor(1, 4, rng));
  return s;
}

// Reference Adam with decoupled decay, written out per scalar.
struct AdamOracle {
  double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::vector<double> m, v;
  int t = 0;

  void step(std::vector<double>& p, const std::vector<double>& g, double lr, double wd) {
    if (m.empty()) {
      m.assign(p.size(), 0.0);
      v.assign(p.size(), 0.0);
    }
    ++t;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] -= lr * wd * p[i];
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(b1, t));
      const double vh = v[i] / (1 - std::pow(b2, t));
      p[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
};

std::vector<double> flatten(const ParamStore& s) {
  std::vector<double> out;
  for (const auto& p : s) out.insert(out.end(), p.value.data().begin(), p.value.data().end());
  return out;
}

data::SyntheticConfig tiny_data() {
  data::SyntheticConfig sc;
  sc.n_sequences = 4;
  sc.min_frames = 48;
  sc.max_frames = 64;
  sc.dims = {4, 4, 4};
  sc.noise = {0.01, 0.01, 0.01};
  return sc;
}

ExperimentConfig tiny_experiment() {
  ExperimentConfig cfg;
  cfg.model.fusion.d_audio = cfg.model.fusion.d_visual = cfg.model.fusion.d_text = 4;
  cfg.model.fusion.iterations = 2;
  cfg.window = {16, 16};
  cfg.train.lr_init = 1e-3;
  cfg.train.batch_size = 4;
  cfg.train.max_epochs = 6;
  cfg.init_seed = 5;
  cfg.train.seed = 6;
  return cfg;
}

}  // namespace

TEST_CASE("adam") {
  std::mt19937_64 rng(1);

  SUBCASE("zero gradient without decay leaves parameters unchanged") {
    ParamStore s = small_store(rng);
    const ParamStore before = s;
    Adam adam(s);
    std::vector<Tensor> zeros{Tensor(2, 3), Tensor(1, 4)};
    for (int i = 0; i < 3; ++i) adam.step(s, zeros, 1e-3, 0.0);
    CHECK(s[0].value.bit_equal(before[0].value));
    CHECK(s[1].value.bit_equal(before[1].value));
    CHECK(adam.step_count() == 3);
  }
  SUBCASE("first step moves each entry by about lr") {
    ParamStore s = small_store(rng);
    const auto before = flatten(s);
    Adam adam(s);
    adam.step(s, {testing::random_tensor(2, 3, rng), testing::random_tensor(1, 4, rng)}, 1e-3, 0.0);
    const auto after = flatten(s);
    for (std::size_t i = 0; i < after.size(); ++i) {
      CHECK(std::abs(std::abs(after[i] - before[i]) - 1e-3) < 1e-8);
    }
  }
  SUBCASE("matches the scalar reference with and without decay") {
    for (double wd : {0.0, 1e-2}) {
      ParamStore s = small_store(rng);
      auto ref = flatten(s);
      Adam adam(s);
      AdamOracle oracle;
      for (int k = 0; k < 5; ++k) {
        std::vector<Tensor> grads{testing::random_tensor(2, 3, rng), testing::random_tensor(1, 4, rng)};
        std::vector<double> g;
        for (const auto& t : grads) g.insert(g.end(), t.data().begin(), t.data().end());
        adam.step(s, grads, 1e-2, wd);
        oracle.step(ref, g, 1e-2, wd);
      }
      const auto got = flatten(s);
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - ref[i]) < 1e-14);
    }
  }
  SUBCASE("gradient shape mismatch") {
    ParamStore s = small_store(rng);
    Adam adam(s);
    CHECK_THROWS_AS(adam.step(s, {Tensor(2, 3)}, 1e-3, 0.0), DimensionError);
    CHECK_THROWS_AS(adam.step(s, {Tensor(2, 3), Tensor(4, 1)}, 1e-3, 0.0), DimensionError);
  }
}

TEST_CASE("warm-up ramps within each early epoch") {
  TrainConfig cfg;
  LrScheduler s(cfg);
  CHECK(s.phase() == LrScheduler::Phase::kWarmup);
  for (std::size_t e = 0; e < 5; ++e) {
    CHECK(s.batch_lr(e, 0, 4) == doctest::Approx(1e-8 + (1e-5 - 1e-8) * 0.25).epsilon(1e-14));
    CHECK(s.batch_lr(e, 3, 4) == 1e-5);
    for (std::size_t b = 1; b < 4; ++b) CHECK(s.batch_lr(e, b, 4) > s.batch_lr(e, b - 1, 4));
    s.end_epoch(e, 0.1 * static_cast<double>(e));
  }
  CHECK(s.phase() == LrScheduler::Phase::kPlateau);
  CHECK(s.batch_lr(5, 0, 4) == 1e-5);
}

TEST_CASE("plateau schedule trace") {
  TrainConfig cfg;
  LrScheduler s(cfg);
  // improve through warm-up, stall for 25 epochs, then improve again
  std::vector<double> val;
  for (int e = 0; e < 6; ++e) val.push_back(0.1 * e);
  for (int e = 0; e < 25; ++e) val.push_back(0.2);
  for (int e = 0; e < 4; ++e) val.push_back(0.6 + 0.01 * e);

  std::vector<double> expected;
  for (std::size_t e = 0; e < val.size(); ++e) {
    // lr in force during epoch e
    if (e < 5) {
      expected.push_back(1e-5);  // end-of-warm-up value
    } else if (e <= 10) {
      expected.push_back(1e-5);
    } else if (e <= 15) {
      expected.push_back(1e-6);
    } else if (e <= 20) {
      expected.push_back(1e-7);
    } else {
      expected.push_back(1e-8);
    }
  }
  double prev = 1e-5;
  for (std::size_t e = 0; e < val.size(); ++e) {
    CAPTURE(e);
    const double lr = s.batch_lr(e, 3, 4);
    CHECK(lr == doctest::Approx(expected[e]).epsilon(1e-12));
    if (e >= 5) CHECK(lr <= prev);
    prev = lr;
    s.end_epoch(e, val[e]);
  }
  CHECK(s.lr() == 1e-8);
  CHECK(s.best() == doctest::Approx(0.63));
}

TEST_CASE("loss mask and masked-label gradients") {
  const auto recs = data::generate_synthetic(tiny_data(), 3);
  auto rec = recs[0];
  const std::vector<std::size_t> invalid{2, 3, 9, 14};
  for (std::size_t t : invalid) rec.valence[t] = data::kInvalidLabel;
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t m = 0; m < 3; ++m) rec.features[m](r, 5) = 0.0;
  }
  const auto w = data::window(rec, {16, 16})[0];

  const auto mask = loss_mask(w, data::Target::kValence);
  for (std::size_t t = 0; t < 16; ++t) {
    const bool expect_off = t == 5 || std::find(invalid.begin(), invalid.end(), t) != invalid.end();
    CHECK(mask[t] == (expect_off ? 0 : 1));
  }

  ModelConfig mc = tiny_experiment().model;
  mc.fusion.frames = 16;
  const auto model = RjcmaModel::create(mc, 2);
  const data::Window* batch[] = {&w};

  ad::Tape ta;
  const auto bound_a = model.bind(ta);
  const auto la = batch_loss(model, ta, bound_a, batch, data::Target::kValence);
  REQUIRE(la.has_value());
  ta.backward(*la);

  // The same loss with the masked frames removed from the CCC altogether.
  ad::Tape tb;
  const auto bound_b = model.bind(tb);
  const auto out = model.forward(tb, bound_b, w.features);
  std::vector<std::size_t> keep;
  std::vector<double> gt;
  for (std::size_t t = 0; t < 16; ++t) {
    if (mask[t]) {
      keep.push_back(t);
      gt.push_back(w.valence[t]);
    }
  }
  const auto lb = metrics::ccc_loss(ad::gather_cols(out.predictions, keep), gt);
  tb.backward(lb);

  CHECK(la->value()[0] == lb.value()[0]);
  for (std::size_t i = 0; i < bound_a.size(); ++i) {
    const Tensor ga = ta.grad(bound_a[i]);
    const Tensor gb = tb.grad(bound_b[i]);
    for (std::size_t k = 0; k < ga.size(); ++k) CHECK(std::abs(ga[k] - gb[k]) <= 1e-14 * (1 + std::abs(gb[k])));
  }
  const Tensor gp = tb.grad(out.predictions);
  for (std::size_t t : invalid) CHECK(gp[t] == 0.0);
  CHECK(gp[5] == 0.0);
}

TEST_CASE("fit keeps the best state") {
  const auto recs = data::generate_synthetic(tiny_data(), 4);
  const std::vector<data::SequenceRecord> train(recs.begin(), recs.begin() + 3);
  const std::vector<data::SequenceRecord> val(recs.begin() + 3, recs.end());
  const auto cfg = tiny_experiment();
  const auto out = train_target(train, val, data::Target::kArousal, cfg);

  REQUIRE(!out.history.empty());
  CHECK(out.history.size() <= cfg.train.max_epochs);
  double best = -2;
  std::size_t best_epoch = 0;
  for (const auto& h : out.history) {
    if (h.val_ccc > best) {
      best = h.val_ccc;
      best_epoch = h.epoch;
    }
  }
  CHECK(out.best_val_ccc == best);
  CHECK(out.best_epoch == best_epoch);
  CHECK(out.val_eval.ccc == best);

  const auto csv = history_csv(out.history);
  CHECK(csv.rfind("epoch,train_loss,val_ccc,lr\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(out.history.size() + 1));
}

TEST_CASE("early stopping when validation never improves") {
  const auto recs = data::generate_synthetic(tiny_data(), 5);
  auto cfg = tiny_experiment();
  // steps far below the parameters' resolution leave the model unchanged
  cfg.train.lr_init = cfg.train.lr_min = 1e-300;
  cfg.train.weight_decay = 0.0;
  cfg.train.max_epochs = 30;
  cfg.train.early_stop_patience = 3;
  const std::vector<data::SequenceRecord> train(recs.begin(), recs.begin() + 3);
  const std::vector<data::SequenceRecord> val(recs.begin() + 3, recs.end());
  const auto out = train_target(train, val, data::Target::kValence, cfg);
  CHECK(out.history.size() == 4);
  CHECK(out.best_epoch == 0);
}

TEST_CASE("training loss decreases over five epochs") {
  const auto recs = data::generate_synthetic(tiny_data(), 6);
  const std::vector<data::SequenceRecord> train(recs.begin(), recs.begin() + 3);
  const std::vector<data::SequenceRecord> val(recs.begin() + 3, recs.end());
  std::vector<double> drops;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto cfg = tiny_experiment();
    cfg.train.max_epochs = 5;
    cfg.train.warmup_epochs = 0;
    cfg.train.early_stop_patience = 100;
    cfg.init_seed = seed;
    cfg.train.seed = seed + 10;
    const auto out = train_target(train, val, data::Target::kValence, cfg);
    REQUIRE(out.history.size() == 5);
    drops.push_back(out.history.front().train_loss - out.history.back().train_loss);
  }
  std::sort(drops.begin(), drops.end());
  CHECK(drops[1] > 0.0);
}

TEST_CASE("training is deterministic") {
  const auto recs = data::generate_synthetic(tiny_data(), 7);
  const std::vector<data::SequenceRecord> train(recs.begin(), recs.begin() + 3);
  const std::vector<data::SequenceRecord> val(recs.begin() + 3, recs.end());
  auto cfg = tiny_experiment();
  cfg.train.max_epochs = 3;
  const auto a = train_target(train, val, data::Target::kValence, cfg);
  const auto b = train_target(train, val, data::Target::kValence, cfg);
  CHECK(history_csv(a.history) == history_csv(b.history));
  for (std::size_t i = 0; i < a.trained.model.params().size(); ++i) {
    CHECK(a.trained.model.params()[i].value.bit_equal(b.trained.model.params()[i].value));
  }
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.lr_min = 1e-3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.plateau_factor = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("result tables") {
  ResultTable t;
  t.key_header = "Validation Set";
  t.rows.push_back({"Fold 0", 0.5, 0.25});
  t.rows.push_back({"Fold 1", 0.4, std::nullopt});
  const auto md = t.to_markdown();
  CHECK(md.find("| Validation Set | Valence | Arousal | Mean |") == 0);
  CHECK(md.find("| Fold 0 | 0.500 | 0.250 | 0.375 |") != std::string::npos);
  CHECK(md.find("| Fold 1 | 0.400 | - | - |") != std::string::npos);
  const auto j = t.to_json();
  CHECK(j["columns"].size() == 4);
  CHECK(j["rows"][1]["arousal"].is_null());
}
