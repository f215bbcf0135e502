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
#include <functional>
#include <span>
#include <vector>

#include "rjcma/tensor.hpp"

// Minimal reverse-mode automatic differentiation over dense 2-D tensors.
//
// A Tape records every primitive in creation order, which is a topological
// order by construction. backward() sweeps it once in reverse and consumes the
// tape: a second call, or recording new nodes afterwards, is a ContractError.
// There is no broadcasting; every elementwise op requires equal shapes.
namespace rjcma::ad {

class Tape;

/// Lightweight handle to a node on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// What a backward rule sees: its inputs, its own forward value, and a sink
/// for gradient contributions.
class BackwardContext {
 public:
  const Tensor& input(std::size_t k) const;
  std::size_t num_inputs() const;
  const Tensor& output() const;
  /// False when input k does not require a gradient; rules may skip work.
  bool wants(std::size_t k) const;
  /// Adds `g` into the gradient buffer of input k.
  void accumulate(std::size_t k, Tensor g);

 private:
  friend class Tape;
  BackwardContext(Tape& tape, std::size_t node) : tape_(tape), node_(node) {}

  Tape& tape_;
  std::size_t node_;
};

using BackwardFn = std::function<void(const Tensor& grad_out, BackwardContext& ctx)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf holding external data. Non-finite values are rejected.
  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var param(Tensor value) { return leaf(std::move(value), true); }

  /// Records an operation. `inputs` must live on this tape. The node requires
  /// a gradient iff any input does.
  Var record(std::vector<Var> inputs, Tensor value, BackwardFn backward);

  /// Reverse sweep from a 1x1 `loss`. Consumes the tape.
  void backward(const Var& loss);

  /// Gradient of the last backward() w.r.t. `v`; zeros if `v` was not reached.
  Tensor grad(const Var& v) const;

  const Tensor& value(const Var& v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

 private:
  friend class Var;
  friend class BackwardContext;

  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    bool requires_grad = false;
    BackwardFn backward;
  };

  void check_owned(const Var& v) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;  // empty Tensor == not reached
  bool consumed_ = false;
};

// Linear algebra.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
/// Vertical stacking in argument order; all parts share the column count.
Var concat_rows(std::span<const Var> parts);
/// out[:, t] = a[:, t - shift] for t >= shift, zero otherwise.
Var shift_cols_right(const Var& a, std::size_t shift);
/// Selects columns by index (in the given order).
Var gather_cols(const Var& a, std::span<const std::size_t> cols);

// Elementwise.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double c);
Var tanh(const Var& a);
/// Subgradient at exactly zero is zero.
Var relu(const Var& a);

// Reductions to 1x1.
Var sum(const Var& a);
Var mean(const Var& a);
/// Population variance (divides by N).
Var variance(const Var& a);
/// Population covariance of two equally sized tensors (N >= 2).
Var covariance(const Var& a, const Var& b);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }

}  // namespace rjcma::ad
