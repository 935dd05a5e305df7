// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "dgnr/image.hpp"

namespace dgnr {

inline constexpr double kPsnrCap = 99.0;

// 10 log10(peak^2 / MSE); identical images report the 99 dB cap.
inline double psnr(const Image& a, const Image& b, double peak = 1.0) {
  check_arg(a.width == b.width && a.height == b.height, "psnr: image shape mismatch");
  double mse = 0.0;
  for (Index i = 0; i < a.chw.size(); ++i) {
    const double d = static_cast<double>(a.chw.data[i]) - static_cast<double>(b.chw.data[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(a.chw.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

// Standard single-scale SSIM on the luminance channel: 11x11 Gaussian window
// (sigma 1.5), k1 = 0.01, k2 = 0.03, dynamic range 1. Mean over valid pixels.
inline double ssim(const Image& a, const Image& b) {
  check_arg(a.width == b.width && a.height == b.height, "ssim: image shape mismatch");
  constexpr Index kWin = 11;
  constexpr double kSigma = 1.5;
  check_arg(a.width >= kWin && a.height >= kWin, "ssim: image smaller than the 11x11 window");
  const Index w = a.width, h = a.height;

  auto luminance = [](const Image& img, Index y, Index x) {
    return 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) + 0.114 * img.at(2, y, x);
  };

  double kernel[kWin];
  double ksum = 0;
  for (Index i = 0; i < kWin; ++i) {
    const double d = static_cast<double>(i) - (kWin - 1) / 2.0;
    kernel[i] = std::exp(-0.5 * d * d / (kSigma * kSigma));
    ksum += kernel[i];
  }
  for (Index i = 0; i < kWin; ++i) kernel[i] /= ksum;

  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  const Index half = kWin / 2;
  double total = 0.0;
  Index count = 0;
  for (Index y = half; y < h - half; ++y) {
    for (Index x = half; x < w - half; ++x) {
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (Index dy = 0; dy < kWin; ++dy)
        for (Index dx = 0; dx < kWin; ++dx) {
          const double wgt = kernel[dy] * kernel[dx];
          const double va = luminance(a, y + dy - half, x + dx - half);
          const double vb = luminance(b, y + dy - half, x + dx - half);
          mu_a += wgt * va;
          mu_b += wgt * vb;
          aa += wgt * va * va;
          bb += wgt * vb * vb;
          ab += wgt * va * vb;
        }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      const double s = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                       ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      total += s;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace dgnr
