// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "dgnr/tape.hpp"

namespace dgnr {

// Sum over the ray batch of the squared color error (mean optional).
// pred: three [R] channel vars; gt: [R,3].
template <class S>
Var<S> mse_loss(Tape<S>& tape, const std::array<Var<S>, 3>& pred, const Tensor<S>& gt,
                bool mean = false) {
  check_arg(gt.rank() == 2 && gt.shape[1] == 3, "mse_loss: ground truth must be [R,3]");
  const Index r = gt.shape[0];
  check_arg(pred[0].val().size() == r, "mse_loss: batch size mismatch");
  Var<S> total;
  for (Index c = 0; c < 3; ++c) {
    Tensor<S> gc(Shape{r});
    for (Index i = 0; i < r; ++i) gc.data[i] = gt.data[i * 3 + c];
    Var<S> d = pred[c] - tape.constant(gc);
    Var<S> sq = sum_all(d * d);
    total = (c == 0) ? sq : total + sq;
  }
  if (mean) total = scale_add(total, S(1) / static_cast<S>(r), S(0));
  return total;
}

// Squared depth differences to the right / below / diagonal neighbors over an
// S_patch x S_patch grid of expected depths.
template <class S>
Var<S> depth_smoothness_loss(Tape<S>& tape, Var<S> depth_patch) {
  (void)tape;
  const Tensor<S>& v = depth_patch.val();
  check_arg(v.rank() == 2 && v.shape[0] == v.shape[1], "depth_smoothness_loss: square patch");
  const Index s = v.shape[0];
  check_arg(s >= 2, "depth_smoothness_loss: patch must be at least 2x2");
  Var<S> base = slice2(depth_patch, 0, s - 1, 0, s - 1);
  Var<S> down = slice2(depth_patch, 1, s - 1, 0, s - 1);
  Var<S> right = slice2(depth_patch, 0, s - 1, 1, s - 1);
  Var<S> diag = slice2(depth_patch, 1, s - 1, 1, s - 1);
  Var<S> d1 = base - down;
  Var<S> d2 = base - right;
  Var<S> d3 = base - diag;
  return sum_all(d1 * d1) + sum_all(d2 * d2) + sum_all(d3 * d3);
}

template <class S>
Var<S> total_loss(Var<S> mse, Var<S> depth_smooth, S lambda) {
  check_arg(lambda >= S(0), "total_loss: lambda must be non-negative");
  return mse + scale_add(depth_smooth, lambda, S(0));
}

}  // namespace dgnr
