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

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "rjcma/errors.hpp"
#include "rjcma/params.hpp"
#include "rjcma/temporal.hpp"

using namespace rjcma;
using namespace rjcma::temporal;
using testing::random_tensor;

namespace {

TcnBlockConfig block(std::size_t c_in, std::size_t c_out, std::size_t ks, std::size_t dil, bool residual = true) {
  return TcnBlockConfig{c_in, c_out, ks, dil, residual};
}

Tensor conv(const Tensor& x, const std::vector<Tensor>& taps, const Tensor& bias, const TcnBlockConfig& cfg) {
  ad::Tape tape;
  std::vector<ad::Var> t;
  for (const auto& w : taps) t.push_back(tape.constant(w));
  return causal_dilated_conv(tape.constant(x), t, tape.constant(bias), cfg).value();
}

Tensor stack_forward(const TcnStack& stack, const ParamStore& store, const Tensor& x) {
  ad::Tape tape;
  std::vector<ad::Var> bound;
  for (const auto& p : store) bound.push_back(tape.constant(p.value));
  return stack.forward(tape.constant(x), bound).value();
}

}  // namespace

TEST_CASE("causal dilated convolution") {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor(3, 9, rng);
  const auto cfg = block(3, 3, 2, 1);

  SUBCASE("identity tap at the current frame") {
    CHECK(conv(x, {Tensor(3, 3), Tensor::identity(3)}, Tensor(3, 1), cfg).bit_equal(x));
  }
  SUBCASE("tap on the previous frame shifts right by one") {
    const Tensor y = conv(x, {Tensor::identity(3), Tensor(3, 3)}, Tensor(3, 1), cfg);
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(y(c, 0) == 0.0);
      for (std::size_t t = 1; t < 9; ++t) CHECK(y(c, t) == x(c, t - 1));
    }
  }
  SUBCASE("hand-computed dilated case") {
    // one channel, taps (a, b, c) at lags 4, 2, 0
    const Tensor s = Tensor::from_rows({{1, 2, 3, 4, 5, 6}});
    const Tensor y = conv(s, {Tensor(1, 1, 10.0), Tensor(1, 1, 100.0), Tensor(1, 1, 1.0)}, Tensor(1, 1, 0.5),
                          block(1, 1, 3, 2));
    CHECK(y == Tensor::from_rows({{1.5, 2.5, 103.5, 204.5, 315.5, 426.5}}));
  }
  SUBCASE("output length equals input length, taps change channels") {
    const Tensor y = conv(x, {random_tensor(5, 3, rng), random_tensor(5, 3, rng), random_tensor(5, 3, rng)},
                          random_tensor(5, 1, rng), block(3, 5, 3, 2, false));
    CHECK(y.shape() == Shape{5, 9});
  }
  SUBCASE("perturbing frame t+1 leaves frames <= t unchanged") {
    const std::vector<Tensor> taps{random_tensor(3, 3, rng), random_tensor(3, 3, rng), random_tensor(3, 3, rng)};
    const Tensor bias = random_tensor(3, 1, rng);
    const auto c3 = block(3, 3, 3, 2);
    const Tensor base = conv(x, taps, bias, c3);
    for (std::size_t t = 0; t + 1 < 9; ++t) {
      Tensor xp = x;
      for (std::size_t c = 0; c < 3; ++c) xp(c, t + 1) += 1.0 + static_cast<double>(c);
      const Tensor y = conv(xp, taps, bias, c3);
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t s = 0; s <= t; ++s) CHECK(y(c, s) == base(c, s));
      }
    }
  }
  SUBCASE("taped version agrees with the plain loop reference") {
    const std::vector<Tensor> taps{random_tensor(4, 3, rng), random_tensor(4, 3, rng), random_tensor(4, 3, rng)};
    const Tensor bias = random_tensor(4, 1, rng);
    const auto c3 = block(3, 4, 3, 3, false);
    const Tensor a = conv(x, taps, bias, c3);
    const Tensor b = causal_dilated_conv(x, taps, bias, c3);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
  SUBCASE("channel mismatch") {
    CHECK_THROWS_AS(conv(x, {Tensor(3, 2), Tensor(3, 2)}, Tensor(3, 1), cfg), DimensionError);
    CHECK_THROWS_AS(conv(x, {Tensor(3, 3)}, Tensor(3, 1), cfg), DimensionError);
    CHECK_THROWS_AS(conv(x, {Tensor(3, 3), Tensor(3, 3)}, Tensor(2, 1), cfg), DimensionError);
  }
}

TEST_CASE("block config") {
  CHECK(block(2, 2, 3, 4).left_padding() == 8);
  CHECK_THROWS(block(2, 2, 0, 1).validate());
  CHECK_THROWS(block(2, 2, 3, 0).validate());
  CHECK_THROWS(block(0, 2, 3, 1).validate());
}

TEST_CASE("default stack") {
  const auto blocks = default_stack(16);
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0].kernel_size == 3);
  CHECK(blocks[0].dilation == 1);
  CHECK(blocks[1].dilation == 2);
  CHECK(blocks[1].channels_in == 16);
  CHECK(blocks[1].channels_out == 16);
  CHECK(blocks[1].residual);
  CHECK(TcnStack("s", blocks).receptive_field() == 7);
}

TEST_CASE("zero weights with residual blocks give the identity") {
  TcnStack stack("tcn", default_stack(4, 3));
  ParamStore store;
  std::mt19937_64 rng(2);
  stack.register_params(store, rng);
  for (auto& p : store) p.value = Tensor(p.value.rows(), p.value.cols());
  const Tensor x = random_tensor(4, 11, rng);
  CHECK(stack_forward(stack, store, x).bit_equal(x));
}

TEST_CASE("stack output shape equals input shape") {
  std::mt19937_64 rng(3);
  for (std::size_t blocks : {1, 2, 4}) {
    TcnStack stack("tcn", default_stack(5, blocks, 2));
    ParamStore store;
    stack.register_params(store, rng);
    CHECK(store.scalar_count() == stack.param_count());
    const Tensor x = random_tensor(5, 13, rng);
    CHECK(stack_forward(stack, store, x).shape() == x.shape());
  }
}

TEST_CASE("dilations 1, 2, 4 with kernel 3 see exactly 15 frames") {
  TcnStack stack("tcn", default_stack(2, 3));
  CHECK(stack.receptive_field() == 15);

  ParamStore store;
  std::mt19937_64 rng(4);
  stack.register_params(store, rng);
  // Positive weights and inputs keep every ReLU active, so each path is live.
  std::uniform_real_distribution<double> pos(0.1, 0.5);
  for (auto& p : store) {
    for (double& v : p.value.data()) v = pos(rng);
  }
  Tensor x(2, 24);
  for (double& v : x.data()) v = pos(rng);
  const Tensor base = stack_forward(stack, store, x);

  auto perturbed_output_at_20 = [&](std::size_t frame) {
    Tensor xp = x;
    xp(0, frame) += 1.0;
    xp(1, frame) += 1.0;
    const Tensor y = stack_forward(stack, store, xp);
    return std::array<double, 2>{y(0, 20), y(1, 20)};
  };
  const auto at4 = perturbed_output_at_20(4);
  CHECK(at4[0] == base(0, 20));
  CHECK(at4[1] == base(1, 20));
  const auto at6 = perturbed_output_at_20(6);
  CHECK(at6[0] != base(0, 20));
  CHECK(at6[1] != base(1, 20));
}

TEST_CASE("two-block stack gradients match finite differences") {
  TcnStack stack("tcn", default_stack(3, 2));
  ParamStore store;
  std::mt19937_64 rng(5);
  stack.register_params(store, rng);
  const Tensor x = random_tensor(3, 10, rng);
  const Tensor w = random_tensor(3, 10, rng);

  for (std::size_t i = 0; i < store.size(); ++i) {
    CAPTURE(store[i].name);
    const testing::Builder f = [&](ad::Tape& t, const ad::Var& v) {
      std::vector<ad::Var> bound;
      for (std::size_t j = 0; j < store.size(); ++j) bound.push_back(j == i ? v : t.constant(store[j].value));
      return ad::sum(ad::mul(stack.forward(t.constant(x), bound), t.constant(w)));
    };
    CHECK(testing::max_rel_grad_error(f, store[i].value) < 1e-4);
  }
  // and w.r.t. the input
  const testing::Builder fx = [&](ad::Tape& t, const ad::Var& v) {
    std::vector<ad::Var> bound;
    for (const auto& p : store) bound.push_back(t.constant(p.value));
    return ad::sum(ad::mul(stack.forward(v, bound), t.constant(w)));
  };
  CHECK(testing::max_rel_grad_error(fx, x) < 1e-4);
}

TEST_CASE("parameter names") {
  TcnStack stack("tcn.text", default_stack(2, 2));
  ParamStore store;
  std::mt19937_64 rng(6);
  stack.register_params(store, rng);
  CHECK(store.find("tcn.text.0.tap0").has_value());
  CHECK(store.find("tcn.text.1.tap2").has_value());
  CHECK(store.find("tcn.text.1.bias").has_value());
  CHECK(store.size() == 8);
}
