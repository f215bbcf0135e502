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

#include <bit>
#include <cmath>
#include <numeric>
#include <vector>

#include "helpers.hpp"
#include "rjcma/data.hpp"
#include "rjcma/errors.hpp"
#include "rjcma/metrics.hpp"
#include "rjcma/model.hpp"

using namespace rjcma;
using metrics::ccc;

namespace {

// Straight evaluation of Lin's formula with population moments.
double ccc_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0, vy = 0, cxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
    cxy += (x[i] - mx) * (y[i] - my);
  }
  vx /= n;
  vy /= n;
  cxy /= n;
  return 2 * cxy / (vx + vy + (mx - my) * (mx - my) + 1e-12);
}

std::vector<double> random_series(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("ccc examples") {
  std::mt19937_64 rng(1);
  const auto x = random_series(50, rng);
  CHECK(ccc(x, x) == 1.0);
  CHECK(ccc(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-11));
  CHECK(std::abs(ccc(std::vector<double>(50, 0.4), x)) < 1e-15);

  for (double c : {0.1, -0.5, 2.0}) {
    std::vector<double> shifted = x;
    for (double& v : shifted) v += c;
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / 50.0;
    double var = 0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= 50.0;
    const double closed = 2 * var / (2 * var + c * c);
    CHECK(std::abs(ccc(x, shifted) - closed) < 1e-10);
    CHECK(ccc(x, shifted) < 1.0);
  }
}

TEST_CASE("ccc degenerate and error cases") {
  const std::vector<double> flat(5, 0.3);
  CHECK(ccc(flat, flat) == 1.0);
  CHECK(ccc(flat, std::vector<double>(5, 0.7)) == 0.0);
  CHECK_THROWS_AS(ccc(std::vector<double>{1.0}, std::vector<double>{1.0}), InsufficientDataError);
  const std::vector<std::uint8_t> one_valid{1, 0, 0};
  CHECK_THROWS_AS(ccc(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}, one_valid), InsufficientDataError);
  CHECK_THROWS_AS(ccc(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), DimensionError);
}

TEST_CASE("ccc matches the formula oracle, is symmetric and bounded") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto x = random_series(20, rng);
    auto y = random_series(20, rng, 0.5);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += 0.7 * x[k];
    const double v = ccc(x, y);
    CHECK(std::abs(v - ccc_oracle(x, y)) < 1e-12);
    CHECK(v == ccc(y, x));
    CHECK(std::abs(v) <= 1.0);
  }
}

TEST_CASE("masked frames have no influence") {
  std::mt19937_64 rng(3);
  const auto x = random_series(30, rng);
  const auto y = random_series(30, rng);
  std::vector<double> xg, yg;
  std::vector<std::uint8_t> mask;
  for (std::size_t i = 0; i < 30; ++i) {
    if (i % 4 == 1) {
      xg.push_back(1e6);
      yg.push_back(-7.0);
      mask.push_back(0);
    }
    xg.push_back(x[i]);
    yg.push_back(y[i]);
    mask.push_back(1);
  }
  CHECK(std::bit_cast<std::uint64_t>(ccc(xg, yg, mask)) == std::bit_cast<std::uint64_t>(ccc(x, y)));
}

TEST_CASE("ccc loss") {
  ad::Tape tape;
  std::mt19937_64 rng(4);
  const auto gt = random_series(10, rng);
  const auto pred = tape.constant(Tensor(1, 10, std::vector<double>(gt)));
  CHECK(metrics::ccc_loss(pred, gt).value()[0] == doctest::Approx(0.0).epsilon(1e-12));

  for (int i = 0; i < 50; ++i) {
    const auto p = random_series(10, rng);
    const auto g = random_series(10, rng);
    const double l = metrics::ccc_loss(tape.constant(Tensor(1, 10, std::vector<double>(p))), g).value()[0];
    CHECK(l >= 0.0);
    CHECK(l <= 2.0);
    CHECK(l == doctest::Approx(1.0 - ccc(p, g)).epsilon(1e-12));
  }
}

TEST_CASE("ccc loss gradient matches finite differences") {
  std::mt19937_64 rng(5);
  const auto gt = random_series(10, rng);
  const Tensor pred(1, 10, random_series(10, rng));
  const testing::Builder f = [&](ad::Tape&, const ad::Var& v) { return metrics::ccc_loss(v, gt); };
  CHECK(testing::max_rel_grad_error(f, pred) < 1e-6);

  std::vector<std::uint8_t> mask(10, 1);
  mask[2] = mask[7] = 0;
  const testing::Builder fm = [&](ad::Tape&, const ad::Var& v) { return metrics::ccc_loss(v, gt, mask); };
  CHECK(testing::max_rel_grad_error(fm, pred) < 1e-6);
  const Tensor g = testing::analytic_grad(fm, pred);
  CHECK(g[2] == 0.0);
  CHECK(g[7] == 0.0);
}

TEST_CASE("score concatenates all valid frames") {
  std::mt19937_64 rng(6);
  metrics::SequencePrediction a{"a", random_series(40, rng), random_series(40, rng)};
  metrics::SequencePrediction b{"b", random_series(25, rng), random_series(25, rng)};
  a.gt[3] = data::kInvalidLabel;
  b.gt[0] = data::kInvalidLabel;

  SUBCASE("perfect predictions give 1") {
    auto p = a;
    for (std::size_t i = 0; i < p.pred.size(); ++i) p.pred[i] = p.gt[i];
    CHECK(metrics::score({p}).ccc == 1.0);
  }
  SUBCASE("single sequence: global equals per-sequence") {
    const auto s = metrics::score({a});
    REQUIRE(s.per_sequence.size() == 1);
    CHECK(s.ccc == *s.per_sequence[0].ccc);
    CHECK(s.n_frames == 39);
  }
  SUBCASE("two sequences match the oracle on the concatenation") {
    std::vector<double> x, y;
    for (const auto* s : {&a, &b}) {
      for (std::size_t i = 0; i < s->gt.size(); ++i) {
        if (s->gt[i] == data::kInvalidLabel) continue;
        x.push_back(s->pred[i]);
        y.push_back(s->gt[i]);
      }
    }
    const auto s = metrics::score({a, b});
    CHECK(s.n_frames == 63);
    CHECK(std::abs(s.ccc - ccc_oracle(x, y)) < 1e-12);
    CHECK(s.per_sequence[1].id == "b");
    CHECK(s.per_sequence[1].n_frames == 24);
  }
  SUBCASE("empty partition") {
    CHECK_THROWS_AS(metrics::score({}), InsufficientDataError);
  }
}

TEST_CASE("evaluate runs the model over every frame once") {
  data::SyntheticConfig sc;
  sc.n_sequences = 2;
  sc.min_frames = 50;
  sc.max_frames = 70;
  sc.dims = {3, 4, 2};
  const auto records = data::generate_synthetic(sc, 9);
  ModelConfig mc;
  mc.fusion.d_audio = 3;
  mc.fusion.d_visual = 4;
  mc.fusion.d_text = 2;
  mc.fusion.frames = 16;
  mc.fusion.iterations = 2;
  const auto model = RjcmaModel::create(mc, 3);

  const auto preds = metrics::predict_sequences(model, records, data::Target::kArousal);
  REQUIRE(preds.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(preds[i].pred.size() == records[i].frames());
    CHECK(preds[i].gt == records[i].arousal);
  }
  const auto ev = metrics::evaluate(model, records, data::Target::kArousal);
  CHECK(ev.ccc == metrics::score(preds).ccc);
  CHECK_THROWS_AS(metrics::evaluate(model, {}, data::Target::kArousal), InsufficientDataError);
}

TEST_CASE("eval result serialisation") {
  metrics::EvalResult r;
  r.valence = metrics::TargetEval{0.5, 100, {{"s1", 0.5, 100}}};
  auto j = r.to_json();
  CHECK(j["ccc_valence"] == 0.5);
  CHECK(j["ccc_arousal"].is_null());
  CHECK(j["mean"] == 0.5);
  CHECK(j.contains("per_sequence"));
  r.arousal = metrics::TargetEval{0.7, 90, {{"s1", std::nullopt, 1}}};
  j = r.to_json();
  CHECK(j["mean"] == doctest::Approx(0.6));
  CHECK(r.mean().value() == doctest::Approx(0.6));
  CHECK(r.to_text().find("valence") != std::string::npos);
}
