// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Discrete alpha-composition quadrature: alpha_k = 1 - exp(-sigma_k delta_k),
// T_k = prod_{j<k}(1 - alpha_j) via exclusive cumulative sums, weights
// w_k = T_k alpha_k. Color composites against a constant background; expected
// depth is the un-normalized weighted sample depth.
#pragma once

#include <array>

#include "dgnr/field.hpp"
#include "dgnr/sampling.hpp"
#include "dgnr/tape.hpp"

namespace dgnr {

template <class S>
struct CompositeVars {
  std::array<Var<S>, 3> rgb;  // each [R]
  Var<S> depth;               // [R]
  Var<S> opacity;             // [R]
};

// sigma/color/u/delta all [R,K].
template <class S>
CompositeVars<S> composite(Tape<S>& tape, Var<S> sigma, std::array<Var<S>, 3> color,
                           const Tensor<S>& u, const Tensor<S>& delta,
                           const Eigen::Vector3f& background) {
  check_arg(sigma.val().rank() == 2, "composite: sigma must be [R,K]");
  check_arg(u.shape == sigma.val().shape && delta.shape == sigma.val().shape,
            "composite: u/delta shape mismatch");
  for (Index i = 0; i < delta.size(); ++i)
    check_arg(delta.data[i] > S(0), "composite: delta must be positive");
  Var<S> delta_c = tape.constant(delta);
  Var<S> u_c = tape.constant(u);
  Var<S> sd = sigma * delta_c;
  Var<S> transmittance = vexp(scale_add(cumsum_exclusive(sd), S(-1), S(0)));
  Var<S> alpha = scale_add(vexp(scale_add(sd, S(-1), S(0))), S(-1), S(1));
  Var<S> w = transmittance * alpha;
  CompositeVars<S> out;
  out.opacity = sum_last(w);
  out.depth = sum_last(w * u_c);
  for (Index c = 0; c < 3; ++c) {
    const S bg = static_cast<S>(background[static_cast<int>(c)]);
    // rgb = sum_k w_k c_k + (1 - A) * bg
    out.rgb[c] = sum_last(w * color[c]) + scale_add(out.opacity, -bg, bg);
  }
  return out;
}

struct CompositeRaw {
  Eigen::Vector3d rgb = Eigen::Vector3d::Zero();
  double depth = 0.0;
  double opacity = 0.0;
};

// Single-ray no-tape version; sigma[K], rgb row-major [K,3].
template <class S>
CompositeRaw composite_raw(const S* sigma, const S* rgb, const double* u, const double* delta,
                           Index k, const Eigen::Vector3f& background) {
  CompositeRaw out;
  double transmittance = 1.0;
  for (Index i = 0; i < k; ++i) {
    const double alpha = 1.0 - std::exp(-static_cast<double>(sigma[i]) * delta[i]);
    const double w = transmittance * alpha;
    out.opacity += w;
    out.depth += w * u[i];
    for (int c = 0; c < 3; ++c) out.rgb[c] += w * static_cast<double>(rgb[i * 3 + c]);
    transmittance *= 1.0 - alpha;
  }
  for (int c = 0; c < 3; ++c)
    out.rgb[c] += (1.0 - out.opacity) * static_cast<double>(background[c]);
  return out;
}

// Renders one ray through the field without a tape (inference path).
// FieldT needs: Scalar, cfg (FieldConfig), density_raw, eval_raw.
template <class FieldT>
CompositeRaw render_ray_raw(const FieldT& field, const Ray& ray, const RaySamples& samples) {
  using S = typename FieldT::Scalar;
  const Index k = static_cast<Index>(samples.u.size());
  std::vector<Vec3> pos(samples.u.size());
  std::vector<Vec3> dirs(samples.u.size(), ray.dir);
  for (size_t i = 0; i < samples.u.size(); ++i) pos[i] = ray.at(samples.u[i]);
  Tensor<S> sigma, rgb;
  field.eval_raw(pos, dirs, sigma, rgb);
  return composite_raw(sigma.ptr(), rgb.ptr(), samples.u.data(), samples.delta.data(), k,
                       field.cfg.background);
}

// Stratified + importance sampling for a whole ray batch; the coarse density
// pass runs as one field batch.
template <class FieldT>
std::vector<RaySamples> sample_rays_batch(const FieldT& field, const std::vector<Ray>& rays,
                                          Rng& rng) {
  using S = typename FieldT::Scalar;
  const Index n = static_cast<Index>(rays.size());
  const Index kc = field.cfg.coarse_samples, kf = field.cfg.fine_samples;
  std::vector<std::vector<double>> coarse_u(static_cast<size_t>(n));
  std::vector<Vec3> pos;
  pos.reserve(static_cast<size_t>(n * kc));
  for (Index i = 0; i < n; ++i) {
    const Ray& ray = rays[static_cast<size_t>(i)];
    coarse_u[i] = stratified_samples(ray.near, ray.far, kc, rng);
    for (double u : coarse_u[i]) pos.push_back(ray.at(u));
  }
  std::vector<RaySamples> samples(static_cast<size_t>(n));
  if (kf > 0) {
    Tensor<S> coarse_sigma = field.density_raw(pos);
    std::vector<double> weights(static_cast<size_t>(kc));
    std::vector<double> dilated(static_cast<size_t>(kc));
    for (Index i = 0; i < n; ++i) {
      const Ray& ray = rays[static_cast<size_t>(i)];
      double transmittance = 1.0;
      const double span = (ray.far - ray.near) / static_cast<double>(kc);
      for (Index j = 0; j < kc; ++j) {
        const double alpha =
            1.0 - std::exp(-static_cast<double>(coarse_sigma.data[i * kc + j]) * span);
        weights[static_cast<size_t>(j)] = transmittance * alpha;
        transmittance *= 1.0 - alpha;
      }
      // One-cell max dilation plus padding; keeps thin shells sampled once
      // the field sharpens below the coarse stratum width.
      double mean_w = 0.0;
      for (double w : weights) mean_w += w;
      mean_w /= static_cast<double>(kc);
      for (Index j = 0; j < kc; ++j) {
        double m = weights[static_cast<size_t>(j)];
        if (j > 0) m = std::max(m, weights[static_cast<size_t>(j - 1)]);
        if (j + 1 < kc) m = std::max(m, weights[static_cast<size_t>(j + 1)]);
        dilated[static_cast<size_t>(j)] = m + 0.01 * mean_w;
      }
      std::vector<double> u = std::move(coarse_u[i]);
      std::vector<double> extra = importance_samples(ray.near, ray.far, dilated, kf, rng);
      u.insert(u.end(), extra.begin(), extra.end());
      samples[i] = finalize_samples(std::move(u), ray.far, field.cfg.last_delta_cap);
    }
  } else {
    for (Index i = 0; i < n; ++i)
      samples[i] = finalize_samples(std::move(coarse_u[i]), rays[static_cast<size_t>(i)].far,
                                    field.cfg.last_delta_cap);
  }
  return samples;
}

// Batched inference render over a ray list.
template <class FieldT>
std::vector<CompositeRaw> render_rays_raw(const FieldT& field, const std::vector<Ray>& rays,
                                          Rng& rng, Index chunk_rays = 8192) {
  using S = typename FieldT::Scalar;
  const Index total = static_cast<Index>(rays.size());
  const Index k = field.cfg.coarse_samples + field.cfg.fine_samples;
  std::vector<CompositeRaw> out(static_cast<size_t>(total));
  std::vector<Vec3> pos;
  std::vector<Vec3> dirs;
  std::vector<Ray> chunk;
  for (Index start = 0; start < total; start += chunk_rays) {
    const Index n = std::min(chunk_rays, total - start);
    chunk.assign(rays.begin() + start, rays.begin() + start + n);
    std::vector<RaySamples> samples = sample_rays_batch(field, chunk, rng);
    pos.clear();
    dirs.clear();
    pos.reserve(static_cast<size_t>(n * k));
    dirs.reserve(static_cast<size_t>(n * k));
    for (Index i = 0; i < n; ++i) {
      const Ray& ray = chunk[static_cast<size_t>(i)];
      for (double u : samples[i].u) {
        pos.push_back(ray.at(u));
        dirs.push_back(ray.dir);
      }
    }
    Tensor<S> sigma, rgb;
    field.eval_raw(pos, dirs, sigma, rgb);
    for (Index i = 0; i < n; ++i) {
      out[static_cast<size_t>(start + i)] =
          composite_raw(sigma.ptr() + i * k, rgb.ptr() + i * k * 3, samples[i].u.data(),
                        samples[i].delta.data(), k, field.cfg.background);
    }
  }
  return out;
}

struct FieldRender {
  Image rgb;
  DepthImage depth;
  DepthImage opacity;
};

template <class FieldT>
FieldRender render_view_field(const FieldT& field, const CameraModel& cam, uint64_t seed) {
  FieldRender out{Image(cam.width, cam.height), DepthImage(cam.width, cam.height),
                  DepthImage(cam.width, cam.height)};
  std::vector<Ray> rays;
  rays.reserve(static_cast<size_t>(cam.width * cam.height));
  for (Index y = 0; y < cam.height; ++y)
    for (Index x = 0; x < cam.width; ++x)
      rays.push_back(cam.pixel_ray(static_cast<double>(x), static_cast<double>(y),
                                   field.cfg.near, field.cfg.far));
  Rng rng(derive_seed(seed, "render_view_field"));
  std::vector<CompositeRaw> shaded = render_rays_raw(field, rays, rng);
  for (Index y = 0; y < cam.height; ++y)
    for (Index x = 0; x < cam.width; ++x) {
      const CompositeRaw& c = shaded[static_cast<size_t>(y * cam.width + x)];
      for (Index ch = 0; ch < 3; ++ch) out.rgb.at(ch, y, x) = static_cast<float>(c.rgb[ch]);
      out.depth.at(y, x) = static_cast<float>(c.depth);
      out.opacity.at(y, x) = static_cast<float>(c.opacity);
    }
  return out;
}

}  // namespace dgnr
