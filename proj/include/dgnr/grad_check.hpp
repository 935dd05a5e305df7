// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference verification of tape gradients. Always runs in
// 64-bit; callers pick input shapes and value ranges that keep the op away
// from non-differentiable points.
#pragma once

#include <cmath>
#include <vector>

#include "dgnr/parameter.hpp"
#include "dgnr/rng.hpp"
#include "dgnr/tape.hpp"

namespace dgnr {

struct GradCheckOptions {
  double h = 1e-4;
  double lo = -1.0;
  double hi = 1.0;
};

// build: (tape, inputs) -> output Var of any shape. The output is scalarized
// by a fixed random projection so every output coordinate influences the
// loss. Returns max over input coordinates of |analytic - numeric| /
// max(1, |numeric|).
template <class F>
double grad_check(F&& build, const std::vector<Shape>& input_shapes, uint64_t seed,
                  GradCheckOptions opt = {}) {
  Rng rng(seed);
  std::vector<Parameter<double>> params;
  params.reserve(input_shapes.size());
  for (size_t i = 0; i < input_shapes.size(); ++i) {
    params.emplace_back("in" + std::to_string(i),
                        Tensor<double>::uniform(input_shapes[i], rng, opt.lo, opt.hi));
  }

  // Fixed projection drawn after the inputs so both are seed-deterministic.
  Tensor<double> projection;
  auto eval = [&](std::vector<Parameter<double>>& ps) -> double {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    vars.reserve(ps.size());
    for (auto& p : ps) vars.push_back(tape.param(p));
    Var<double> out = build(tape, vars);
    if (projection.size() == 0) {
      Rng prj(splitmix64(seed ^ 0x9E3779B97F4A7C15ULL));
      projection = Tensor<double>::uniform(out.val().shape, prj, -1.0, 1.0);
    }
    return (out.val().data * projection.data).sum();
  };

  // Analytic pass.
  double analytic_loss;
  std::vector<Tensor<double>> analytic;
  {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (auto& p : params) {
      p.zero_grad();
      vars.push_back(tape.param(p));
    }
    Var<double> out = build(tape, vars);
    if (projection.size() == 0) {
      Rng prj(splitmix64(seed ^ 0x9E3779B97F4A7C15ULL));
      projection = Tensor<double>::uniform(out.val().shape, prj, -1.0, 1.0);
    }
    Var<double> loss = sum_all(out * tape.constant(projection));
    analytic_loss = loss.val().value();
    tape.backward(loss);
    for (auto& p : params) analytic.push_back(p.grad);
  }
  (void)analytic_loss;

  double max_rel = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    for (Index i = 0; i < params[pi].size(); ++i) {
      const double keep = params[pi].value.data[i];
      params[pi].value.data[i] = keep + opt.h;
      const double fp = eval(params);
      params[pi].value.data[i] = keep - opt.h;
      const double fm = eval(params);
      params[pi].value.data[i] = keep;
      const double numeric = (fp - fm) / (2.0 * opt.h);
      const double rel =
          std::abs(analytic[pi].data[i] - numeric) / std::max(1.0, std::abs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace dgnr
