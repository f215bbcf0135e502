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

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rjcma/autodiff.hpp"
#include "rjcma/params.hpp"

namespace rjcma::ad {

/// Builds a scalar loss on `tape` from leaves bound to each parameter, in
/// ParamStore order. Must be deterministic.
using LossFn = std::function<Var(Tape& tape, std::span<const Var> params)>;

/// Elementwise relative error: |a - n| / max(|a|, |n|, 1e-12).
double relative_error(double analytic, double numeric);

struct GradCheckEntry {
  std::string name;
  Shape shape;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckReport {
  double step = 0.0;
  double tolerance = 0.0;
  std::vector<GradCheckEntry> entries;

  bool passed() const;
  double max_rel_error() const;
};

/// Compares backward() against central differences (f(p+h) - f(p-h)) / 2h
/// for every scalar of every parameter.
GradCheckReport grad_check(const LossFn& f, const ParamStore& params, double step = 1e-5,
                           double tolerance = 1e-4);

/// Value of `f` without running backward.
double evaluate_loss(const LossFn& f, const ParamStore& params);

/// One row per parameter group plus a PASS/FAIL summary line.
void print_report(std::ostream& os, const GradCheckReport& report);

}  // namespace rjcma::ad
