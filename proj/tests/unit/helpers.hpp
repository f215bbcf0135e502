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

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "rjcma/autodiff.hpp"
#include "rjcma/tensor.hpp"

namespace testing {

inline rjcma::Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                   double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  rjcma::Tensor t(rows, cols);
  for (double& v : t.data()) v = n(rng);
  return t;
}

// Scalar function of one tensor built on a fresh tape.
using Builder = std::function<rjcma::ad::Var(rjcma::ad::Tape&, const rjcma::ad::Var&)>;

inline double eval_at(const Builder& f, const rjcma::Tensor& x) {
  rjcma::ad::Tape tape;
  return f(tape, tape.constant(x)).value()[0];
}

inline rjcma::Tensor analytic_grad(const Builder& f, const rjcma::Tensor& x) {
  rjcma::ad::Tape tape;
  const auto v = tape.param(x);
  const auto loss = f(tape, v);
  tape.backward(loss);
  return tape.grad(v);
}

// Central differences, written independently of the library's grad_check.
inline rjcma::Tensor numeric_grad(const Builder& f, const rjcma::Tensor& x, double h = 1e-5) {
  rjcma::Tensor g(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    rjcma::Tensor plus = x, minus = x;
    plus[i] += h;
    minus[i] -= h;
    g[i] = (eval_at(f, plus) - eval_at(f, minus)) / (2 * h);
  }
  return g;
}

inline double rel_err(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-12});
}

inline double max_rel_err(const rjcma::Tensor& a, const rjcma::Tensor& n) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], n[i]));
  return worst;
}

inline double max_rel_grad_error(const Builder& f, const rjcma::Tensor& x) {
  return max_rel_err(analytic_grad(f, x), numeric_grad(f, x));
}

}  // namespace testing
