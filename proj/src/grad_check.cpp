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

#include "rjcma/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "rjcma/errors.hpp"

namespace rjcma {

namespace ad {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / denom;
}

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(),
                     [&](const GradCheckEntry& e) { return e.max_rel_error < tolerance; });
}

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

namespace {

std::vector<Var> bind(Tape& tape, const ParamStore& params) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.param(p.value));
  return vars;
}

}  // namespace

double evaluate_loss(const LossFn& f, const ParamStore& params) {
  Tape tape;
  auto vars = bind(tape, params);
  Var loss = f(tape, vars);
  if (loss.rows() != 1 || loss.cols() != 1) throw ContractError("loss must be 1x1");
  return loss.value()[0];
}

GradCheckReport grad_check(const LossFn& f, const ParamStore& params, double step,
                           double tolerance) {
  GradCheckReport report;
  report.step = step;
  report.tolerance = tolerance;

  std::vector<Tensor> analytic;
  {
    Tape tape;
    auto vars = bind(tape, params);
    Var loss = f(tape, vars);
    tape.backward(loss);
    for (const Var& v : vars) analytic.push_back(tape.grad(v));
  }

  ParamStore probe = params;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    GradCheckEntry entry;
    entry.name = probe[p].name;
    entry.shape = probe[p].value.shape();
    Tensor& w = probe[p].value;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double original = w[i];
      w[i] = original + step;
      const double plus = evaluate_loss(f, probe);
      w[i] = original - step;
      const double minus = evaluate_loss(f, probe);
      w[i] = original;
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[p][i];
      const double rel = relative_error(a, numeric);
      entry.max_abs_error = std::max(entry.max_abs_error, std::abs(a - numeric));
      if (i == 0 || rel > entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_index = i;
        entry.worst_analytic = a;
        entry.worst_numeric = numeric;
      }
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

void print_report(std::ostream& os, const GradCheckReport& report) {
  std::size_t width = 9;
  for (const auto& e : report.entries) width = std::max(width, e.name.size());
  const auto flags = os.flags();
  os << std::left << std::setw(static_cast<int>(width)) << "parameter" << "  "
     << std::setw(9) << "shape" << "  " << std::setw(12) << "max_rel_err" << "  "
     << std::setw(12) << "max_abs_err" << "  status\n";
  for (const auto& e : report.entries) {
    os << std::left << std::setw(static_cast<int>(width)) << e.name << "  " << std::setw(9)
       << to_string(e.shape) << "  " << std::scientific << std::setprecision(3) << std::setw(12)
       << e.max_rel_error << "  " << std::setw(12) << e.max_abs_error << "  "
       << (e.max_rel_error < report.tolerance ? "ok" : "FAIL") << '\n';
    os.unsetf(std::ios::floatfield);
  }
  os << (report.passed() ? "PASS" : "FAIL") << ": max relative error " << std::scientific
     << std::setprecision(3) << report.max_rel_error() << " (tolerance " << report.tolerance
     << ", h = " << report.step << ")\n";
  os.flags(flags);
}

}  // namespace ad
}  // namespace rjcma
