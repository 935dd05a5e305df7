// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Ray sampling: stratified coarse pass, then one round of importance
// sampling from the piecewise-constant PDF over the coarse strata.
#pragma once

#include <algorithm>
#include <vector>

#include "dgnr/camera.hpp"
#include "dgnr/rng.hpp"
#include "dgnr/tensor.hpp"

namespace dgnr {

struct RaySamples {
  std::vector<double> u;      // sorted ascending, within [near, far]
  std::vector<double> delta;  // segment lengths; last one capped
};

inline std::vector<double> stratified_samples(double near, double far, Index count, Rng& rng) {
  check_arg(count >= 2, "stratified_samples: need at least 2 samples");
  std::vector<double> u(static_cast<size_t>(count));
  const double span = (far - near) / static_cast<double>(count);
  for (Index k = 0; k < count; ++k)
    u[static_cast<size_t>(k)] = near + (static_cast<double>(k) + rng.uniform()) * span;
  return u;
}

// Inverse-CDF draws from bin masses proportional to weights (plus a small
// floor so empty histograms degrade to uniform sampling).
inline std::vector<double> importance_samples(double near, double far,
                                              const std::vector<double>& weights, Index count,
                                              Rng& rng) {
  const size_t bins = weights.size();
  check_arg(bins >= 1, "importance_samples: need at least one bin");
  std::vector<double> cdf(bins + 1, 0.0);
  const double floor_mass = 1e-3 / static_cast<double>(bins);
  for (size_t i = 0; i < bins; ++i)
    cdf[i + 1] = cdf[i] + std::max(weights[i], 0.0) + floor_mass;
  const double total = cdf.back();
  std::vector<double> out(static_cast<size_t>(count));
  const double bin_span = (far - near) / static_cast<double>(bins);
  for (Index k = 0; k < count; ++k) {
    const double target = rng.uniform() * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    size_t b = std::min(bins - 1, static_cast<size_t>(std::distance(cdf.begin(), it)) - 1);
    const double frac = (target - cdf[b]) / std::max(cdf[b + 1] - cdf[b], 1e-300);
    out[static_cast<size_t>(k)] =
        near + (static_cast<double>(b) + frac) * bin_span;
  }
  return out;
}

inline RaySamples finalize_samples(std::vector<double> u, double far, double last_delta_cap) {
  std::sort(u.begin(), u.end());
  RaySamples s;
  s.u = std::move(u);
  const size_t k = s.u.size();
  s.delta.resize(k);
  for (size_t i = 0; i + 1 < k; ++i) s.delta[i] = std::max(s.u[i + 1] - s.u[i], 1e-8);
  s.delta[k - 1] = std::clamp(far - s.u[k - 1], 1e-6, last_delta_cap);
  return s;
}

// Coarse stratified samples plus fine samples from the coarse-weight PDF.
// density_of: callback returning sigma at a batch of positions (the coarse
// field pass). The union is sorted; sampling is deterministic given rng.
template <class DensityFn>
RaySamples sample_ray(const Ray& ray, Index coarse, Index fine, double last_delta_cap,
                      DensityFn&& density_of, Rng& rng) {
  validate_ray(ray);
  check_arg(coarse >= 2, "sample_ray: coarse count must be >= 2");
  std::vector<double> u = stratified_samples(ray.near, ray.far, coarse, rng);
  if (fine > 0) {
    std::vector<Vec3> pos(u.size());
    for (size_t i = 0; i < u.size(); ++i) pos[i] = ray.at(u[i]);
    std::vector<double> sigma = density_of(pos);
    // Coarse compositing weights w_k = T_k * alpha_k over the strata.
    std::vector<double> w(u.size());
    double transmittance = 1.0;
    const double span = (ray.far - ray.near) / static_cast<double>(coarse);
    for (size_t i = 0; i < u.size(); ++i) {
      const double alpha = 1.0 - std::exp(-sigma[i] * span);
      w[i] = transmittance * alpha;
      transmittance *= 1.0 - alpha;
    }
    std::vector<double> extra = importance_samples(ray.near, ray.far, w, fine, rng);
    u.insert(u.end(), extra.begin(), extra.end());
  }
  return finalize_samples(std::move(u), ray.far, last_delta_cap);
}

}  // namespace dgnr
