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

#include <array>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "rjcma/fusion.hpp"
#include "rjcma/params.hpp"

namespace testing::fusion_oracle {

using namespace rjcma;
using namespace rjcma::fusion;

struct Block {
  FusionConfig cfg;
  ParamStore store;
  RjcmaParams params;
  std::array<Tensor, 3> inputs;

  Block(FusionConfig c, std::uint64_t seed, double attention_scale = 0.3) : cfg(c) {
    std::mt19937_64 rng(seed);
    params = RjcmaParams::create(cfg, store, rng, InitConfig{attention_scale});
    for (Modality m : kModalities) {
      inputs[static_cast<std::size_t>(m)] = random_tensor(cfg.dim(m), cfg.frames, rng);
    }
  }

  Tensor& weight(std::size_t slot) { return store[slot].value; }
};

inline std::vector<ad::Var> bind(ad::Tape& tape, const ParamStore& store) {
  std::vector<ad::Var> out;
  for (const auto& p : store) out.push_back(tape.param(p.value));
  return out;
}

struct Run {
  ad::Tape tape;
  FusionOutput out;
};

inline std::unique_ptr<Run> forward(const Block& b, bool keep = true) {
  auto run = std::make_unique<Run>();
  const auto bound = bind(run->tape, b.store);
  run->out = rjcma_forward(run->tape.constant(b.inputs[0]), run->tape.constant(b.inputs[1]),
                           run->tape.constant(b.inputs[2]), b.params, bound, b.cfg, keep);
  return run;
}

inline FusionConfig config(std::size_t da, std::size_t dv, std::size_t dt, std::size_t k, std::size_t l) {
  FusionConfig c;
  c.d_audio = da;
  c.d_visual = dv;
  c.d_text = dt;
  c.frames = k;
  c.iterations = l;
  return c;
}

// Independent plain-loop implementation of one joint cross-attention pass.
// Products accumulate over the inner index in ascending order from +0.0 and
// the FC bias is added after the product, as the library does.
inline Tensor mm(const Tensor& a, const Tensor& b) {
  Tensor c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      c(i, j) = s;
    }
  }
  return c;
}

inline Tensor tr(const Tensor& a) {
  Tensor t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

inline std::array<Tensor, 3> reference_jca(const Block& b) {
  const std::size_t d = b.cfg.joint_dim();
  const std::size_t k = b.cfg.frames;
  Tensor stacked(d, k);
  std::size_t row = 0;
  for (const auto& x : b.inputs) {
    for (std::size_t r = 0; r < x.rows(); ++r, ++row) {
      for (std::size_t c = 0; c < k; ++c) stacked(row, c) = x(r, c);
    }
  }
  Tensor joint = mm(b.store[b.params.fc_weight].value, stacked);
  const Tensor& bias = b.store[b.params.fc_bias].value;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t c = 0; c < k; ++c) joint(i, c) = joint(i, c) + bias(i, 0);
  }
  std::array<Tensor, 3> attended;
  const double inv = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t m = 0; m < 3; ++m) {
    const auto& s = b.params.steps[0][m];
    const Tensor& x = b.inputs[m];
    Tensor c = mm(mm(tr(x), b.store[s.w_joint].value), joint);
    for (double& v : c.data()) v = std::tanh(v * inv);
    Tensor h = mm(mm(x, b.store[s.w_corr].value), c);
    for (double& v : h.data()) v = v > 0.0 ? v : 0.0;
    Tensor a = mm(h, b.store[s.w_att].value);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = a[i] + x[i];
    attended[m] = a;
  }
  return attended;
}

// Plain-loop regression head: tanh(W2 relu(W1 x + b1) + b2) per frame.
inline Tensor reference_head(const Block& b, const Tensor& x) {
  const auto& h = b.params.head;
  Tensor hidden = mm(b.store[h.w1].value, x);
  const Tensor& b1 = b.store[h.b1].value;
  for (std::size_t i = 0; i < hidden.rows(); ++i) {
    for (std::size_t c = 0; c < hidden.cols(); ++c) {
      const double v = hidden(i, c) + b1(i, 0);
      hidden(i, c) = v > 0.0 ? v : 0.0;
    }
  }
  Tensor out = mm(b.store[h.w2].value, hidden);
  const double b2 = b.store[h.b2].value(0, 0);
  for (double& v : out.data()) v = std::tanh(v + b2);
  return out;
}

}  // namespace testing::fusion_oracle
