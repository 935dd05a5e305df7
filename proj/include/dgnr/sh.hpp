// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Fixed real spherical-harmonics basis up to degree 3 (16 values), in the
// all-positive-l1 convention (Condon-Shortley phase folded into the basis).
// Non-learnable direction encoding.
#pragma once

#include <array>
#include <cmath>

#include "dgnr/camera.hpp"
#include "dgnr/tensor.hpp"

namespace dgnr {

inline constexpr Index kShBasisSize = 16;

template <class S>
std::array<S, kShBasisSize> sh_encode(const Vec3& d) {
  check_arg(std::abs(d.norm() - 1.0) <= 1e-6, "sh_encode: direction must be unit length");
  const double x = d.x(), y = d.y(), z = d.z();
  const double xx = x * x, yy = y * y, zz = z * z;
  std::array<S, kShBasisSize> out;
  // l = 0
  out[0] = static_cast<S>(0.28209479177387814);
  // l = 1
  out[1] = static_cast<S>(0.4886025119029199 * y);
  out[2] = static_cast<S>(0.4886025119029199 * z);
  out[3] = static_cast<S>(0.4886025119029199 * x);
  // l = 2
  out[4] = static_cast<S>(1.0925484305920792 * x * y);
  out[5] = static_cast<S>(1.0925484305920792 * y * z);
  out[6] = static_cast<S>(0.31539156525252005 * (3.0 * zz - 1.0));
  out[7] = static_cast<S>(1.0925484305920792 * x * z);
  out[8] = static_cast<S>(0.5462742152960396 * (xx - yy));
  // l = 3
  out[9] = static_cast<S>(0.5900435899266435 * y * (3.0 * xx - yy));
  out[10] = static_cast<S>(2.890611442640554 * x * y * z);
  out[11] = static_cast<S>(0.4570457994644658 * y * (5.0 * zz - 1.0));
  out[12] = static_cast<S>(0.3731763325901154 * z * (5.0 * zz - 3.0));
  out[13] = static_cast<S>(0.4570457994644658 * x * (5.0 * zz - 1.0));
  out[14] = static_cast<S>(1.445305721320277 * z * (xx - yy));
  out[15] = static_cast<S>(0.5900435899266435 * x * (xx - 3.0 * yy));
  return out;
}

// Basis matrix [P,16] for a batch of unit directions.
template <class S>
Tensor<S> sh_encode_batch(const std::vector<Vec3>& dirs) {
  Tensor<S> out(Shape{static_cast<Index>(dirs.size()), kShBasisSize});
  for (size_t i = 0; i < dirs.size(); ++i) {
    auto b = sh_encode<S>(dirs[i]);
    for (Index j = 0; j < kShBasisSize; ++j) out.data[static_cast<Index>(i) * kShBasisSize + j] = b[j];
  }
  return out;
}

// Amplitude bound per degree from the SH addition theorem.
inline double sh_degree_bound(int l) { return std::sqrt((2.0 * l + 1.0) / (4.0 * M_PI)); }

}  // namespace dgnr
