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

#include "rjcma/autodiff.hpp"

#include <cmath>
#include <string>

#include "rjcma/errors.hpp"

namespace rjcma::ad {

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw ContractError("use of an unbound Var");
  return tape_->value(*this);
}

bool Var::requires_grad() const { return tape_->nodes_.at(id_).requires_grad; }

const Tensor& BackwardContext::input(std::size_t k) const {
  return tape_.nodes_[tape_.nodes_[node_].inputs[k]].value;
}

std::size_t BackwardContext::num_inputs() const { return tape_.nodes_[node_].inputs.size(); }

const Tensor& BackwardContext::output() const { return tape_.nodes_[node_].value; }

bool BackwardContext::wants(std::size_t k) const {
  return tape_.nodes_[tape_.nodes_[node_].inputs[k]].requires_grad;
}

void BackwardContext::accumulate(std::size_t k, Tensor g) {
  const std::size_t target = tape_.nodes_[node_].inputs[k];
  if (!tape_.nodes_[target].requires_grad) return;
  Tensor& slot = tape_.grads_[target];
  if (slot.empty() && g.size() > 0) {
    slot = std::move(g);
  } else {
    kernels::add_into(slot, g);
  }
}

void Tape::check_owned(const Var& v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw ContractError("Var does not belong to this tape");
  }
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  if (consumed_) throw ContractError("tape already consumed by backward()");
  if (!value.all_finite()) throw NumericalError("leaf tensor contains non-finite values");
  nodes_.push_back(Node{std::move(value), {}, requires_grad, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::vector<Var> inputs, Tensor value, BackwardFn backward) {
  if (consumed_) throw ContractError("tape already consumed by backward()");
  Node node;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    check_owned(in);
    node.inputs.push_back(in.id_);
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(const Var& v) const {
  check_owned(v);
  return nodes_[v.id_].value;
}

void Tape::backward(const Var& loss) {
  check_owned(loss);
  if (consumed_) throw ContractError("backward() called twice on the same tape");
  const Tensor& lv = nodes_[loss.id_].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward() requires a 1x1 loss, got " + to_string(lv.shape()));
  }
  consumed_ = true;
  grads_.assign(nodes_.size(), Tensor{});
  if (!nodes_[loss.id_].requires_grad) return;
  grads_[loss.id_] = Tensor(1, 1, 1.0);
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || grads_[i].empty()) continue;
    BackwardContext ctx(*this, i);
    node.backward(grads_[i], ctx);
  }
}

Tensor Tape::grad(const Var& v) const {
  check_owned(v);
  if (!consumed_) throw ContractError("grad() requested before backward()");
  const Tensor& g = grads_[v.id_];
  if (g.empty()) return Tensor(v.rows(), v.cols());
  return g;
}

namespace {

Tape& same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw ContractError("operands live on different tapes");
  return a.tape();
}

template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  auto src = a.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.rows(), a.cols());
  auto pa = a.data();
  auto pb = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < pa.size(); ++i) dst[i] = f(pa[i], pb[i]);
  return out;
}

Tensor scalar(double v) { return Tensor(1, 1, v); }

void require_nonempty(const Var& a, const char* op) {
  if (a.value().size() == 0) throw InsufficientDataError(std::string(op) + ": empty input");
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  Tensor out = kernels::matmul(a.value(), b.value());
  return t.record({a, b}, std::move(out), [](const Tensor& g, BackwardContext& ctx) {
    if (ctx.wants(0)) ctx.accumulate(0, kernels::matmul_nt(g, ctx.input(1)));
    if (ctx.wants(1)) ctx.accumulate(1, kernels::matmul_tn(ctx.input(0), g));
  });
}

Var transpose(const Var& a) {
  return a.tape().record({a}, kernels::transpose(a.value()),
                         [](const Tensor& g, BackwardContext& ctx) {
                           ctx.accumulate(0, kernels::transpose(g));
                         });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no parts");
  Tape& t = parts.front().tape();
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    same_tape(parts.front(), p);
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " + to_string(p.shape()) + " vs " +
                           std::to_string(cols) + " columns");
    }
    rows += p.rows();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    auto src = p.value().data();
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(offset * cols));
    offset += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(inputs), std::move(out), [](const Tensor& g, BackwardContext& ctx) {
    const std::size_t cols = g.cols();
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ctx.num_inputs(); ++k) {
      const std::size_t rows = ctx.input(k).rows();
      if (ctx.wants(k)) {
        auto begin = g.data().begin() + static_cast<std::ptrdiff_t>(offset * cols);
        ctx.accumulate(k, Tensor(rows, cols, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(rows * cols))));
      }
      offset += rows;
    }
  });
}

Var shift_cols_right(const Var& a, std::size_t shift) {
  const Tensor& x = a.value();
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = shift; c < x.cols(); ++c) out(r, c) = x(r, c - shift);
  }
  return a.tape().record({a}, std::move(out), [shift](const Tensor& g, BackwardContext& ctx) {
    Tensor dx(g.rows(), g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = shift; c < g.cols(); ++c) dx(r, c - shift) = g(r, c);
    }
    ctx.accumulate(0, std::move(dx));
  });
}

Var gather_cols(const Var& a, std::span<const std::size_t> cols) {
  const Tensor& x = a.value();
  for (std::size_t c : cols) {
    if (c >= x.cols()) throw DimensionError("gather_cols: column index out of range");
  }
  Tensor out(x.rows(), cols.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(r, j) = x(r, cols[j]);
  }
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  return a.tape().record({a}, std::move(out), [idx = std::move(idx)](const Tensor& g, BackwardContext& ctx) {
    const Tensor& x = ctx.input(0);
    Tensor dx(x.rows(), x.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t j = 0; j < idx.size(); ++j) dx(r, idx[j]) += g(r, j);
    }
    ctx.accumulate(0, std::move(dx));
  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  return t.record({a, b}, zip(a.value(), b.value(), [](double x, double y) { return x + y; }),
                  [](const Tensor& g, BackwardContext& ctx) {
                    ctx.accumulate(0, g);
                    ctx.accumulate(1, g);
                  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  return t.record({a, b}, zip(a.value(), b.value(), [](double x, double y) { return x - y; }),
                  [](const Tensor& g, BackwardContext& ctx) {
                    ctx.accumulate(0, g);
                    if (ctx.wants(1)) ctx.accumulate(1, map(g, [](double v) { return -v; }));
                  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  return t.record({a, b}, zip(a.value(), b.value(), [](double x, double y) { return x * y; }),
                  [](const Tensor& g, BackwardContext& ctx) {
                    auto times = [](double u, double v) { return u * v; };
                    if (ctx.wants(0)) ctx.accumulate(0, zip(g, ctx.input(1), times));
                    if (ctx.wants(1)) ctx.accumulate(1, zip(g, ctx.input(0), times));
                  });
}

Var div(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "div");
  Tensor out = zip(a.value(), b.value(), [](double x, double y) { return x / y; });
  if (!out.all_finite()) throw NumericalError("div: non-finite result (division by zero?)");
  return t.record({a, b}, std::move(out), [](const Tensor& g, BackwardContext& ctx) {
    const Tensor& y = ctx.input(1);
    if (ctx.wants(0)) ctx.accumulate(0, zip(g, y, [](double u, double v) { return u / v; }));
    if (ctx.wants(1)) {
      Tensor q = zip(g, ctx.output(), [](double u, double o) { return -u * o; });
      ctx.accumulate(1, zip(q, y, [](double u, double v) { return u / v; }));
    }
  });
}

Var scale(const Var& a, double s) {
  return a.tape().record({a}, map(a.value(), [s](double x) { return x * s; }),
                         [s](const Tensor& g, BackwardContext& ctx) {
                           ctx.accumulate(0, map(g, [s](double v) { return v * s; }));
                         });
}

Var add_scalar(const Var& a, double c) {
  return a.tape().record({a}, map(a.value(), [c](double x) { return x + c; }),
                         [](const Tensor& g, BackwardContext& ctx) { ctx.accumulate(0, g); });
}

Var tanh(const Var& a) {
  return a.tape().record({a}, map(a.value(), [](double x) { return std::tanh(x); }),
                         [](const Tensor& g, BackwardContext& ctx) {
                           ctx.accumulate(0, zip(g, ctx.output(), [](double u, double y) {
                                            return u * (1.0 - y * y);
                                          }));
                         });
}

Var relu(const Var& a) {
  return a.tape().record({a}, map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }),
                         [](const Tensor& g, BackwardContext& ctx) {
                           ctx.accumulate(0, zip(g, ctx.input(0), [](double u, double x) {
                                            return x > 0.0 ? u : 0.0;
                                          }));
                         });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().record({a}, scalar(s), [](const Tensor& g, BackwardContext& ctx) {
    const Tensor& x = ctx.input(0);
    ctx.accumulate(0, Tensor(x.rows(), x.cols(), g[0]));
  });
}

Var mean(const Var& a) {
  require_nonempty(a, "mean");
  const double n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().record({a}, scalar(s / n), [n](const Tensor& g, BackwardContext& ctx) {
    const Tensor& x = ctx.input(0);
    ctx.accumulate(0, Tensor(x.rows(), x.cols(), g[0] / n));
  });
}

namespace {

double plain_mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace

Var variance(const Var& a) {
  require_nonempty(a, "variance");
  auto x = a.value().data();
  const double n = static_cast<double>(x.size());
  const double mu = plain_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return a.tape().record({a}, scalar(s / n), [n](const Tensor& g, BackwardContext& ctx) {
    const Tensor& x = ctx.input(0);
    const double mu = plain_mean(x.data());
    const double k = 2.0 * g[0] / n;
    ctx.accumulate(0, map(x, [mu, k](double v) { return k * (v - mu); }));
  });
}

Var covariance(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  if (a.value().size() != b.value().size()) {
    throw DimensionError("covariance: lengths differ");
  }
  if (a.value().size() < 2) throw InsufficientDataError("covariance: needs at least 2 elements");
  auto x = a.value().data();
  auto y = b.value().data();
  const double n = static_cast<double>(x.size());
  const double mx = plain_mean(x);
  const double my = plain_mean(y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
  return t.record({a, b}, scalar(s / n), [n](const Tensor& g, BackwardContext& ctx) {
    const Tensor& x = ctx.input(0);
    const Tensor& y = ctx.input(1);
    const double k = g[0] / n;
    if (ctx.wants(0)) {
      const double my = plain_mean(y.data());
      Tensor dx(x.rows(), x.cols());
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] = k * (y[i] - my);
      ctx.accumulate(0, std::move(dx));
    }
    if (ctx.wants(1)) {
      const double mx = plain_mean(x.data());
      Tensor dy(y.rows(), y.cols());
      for (std::size_t i = 0; i < y.size(); ++i) dy[i] = k * (x[i] - mx);
      ctx.accumulate(1, std::move(dy));
    }
  });
}

}  // namespace rjcma::ad
