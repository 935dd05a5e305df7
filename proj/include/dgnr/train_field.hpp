// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Per-block field optimization: pixel-ray batches plus depth patches, color
// MSE plus weighted depth smoothness, Adam with exponential lr decay.
#pragma once

#include <ostream>

#include "dgnr/adam.hpp"
#include "dgnr/dataset.hpp"
#include "dgnr/losses.hpp"
#include "dgnr/volume.hpp"

namespace dgnr {

struct FieldTrainConfig {
  Index steps = 1500;
  Index rays_per_batch = 256;        // pixel rays
  Index pixel_rays_per_patch = 16;   // one S x S patch per this many pixel rays
  Index s_patch = 8;
  double lr = 1e-3;
  double lr_end = 1e-6;
  double lambda = 1e-5;
  bool mse_mean = false;  // batch MSE is a sum as defined; mean is opt-in
  Index log_every = 100;
};

struct FieldTrainResult {
  std::vector<double> total_curve;
  std::vector<double> mse_curve;
  std::vector<double> depth_curve;
};

template <class S>
FieldTrainResult train_field(RadianceField<S>& field, const Dataset& ds,
                             const std::vector<Index>& frames, const FieldTrainConfig& tcfg,
                             uint64_t seed, std::ostream* log = nullptr) {
  check_arg(frames.size() >= 2, "train_field: need at least 2 training views");
  check_arg(tcfg.s_patch >= 2, "train_field: patch size must be >= 2");
  const Index s = tcfg.s_patch;
  const Index n_patches = std::max<Index>(
      tcfg.pixel_rays_per_patch > 0 ? tcfg.rays_per_batch / tcfg.pixel_rays_per_patch : 0, 0);
  const Index k = field.cfg.coarse_samples + field.cfg.fine_samples;

  Adam<S> opt(field.params(), tcfg.lr, tcfg.lr_end, tcfg.steps);
  FieldTrainResult result;
  result.total_curve.reserve(tcfg.steps);

  std::vector<Ray> rays;
  std::vector<Eigen::Vector3f> gts;
  for (Index step = 0; step < tcfg.steps; ++step) {
    Rng rng(derive_seed(seed, "field_step", static_cast<uint64_t>(step)));
    rays.clear();
    gts.clear();

    auto push_pixel = [&](const Frame& fr, Index x, Index y) {
      rays.push_back(fr.camera.pixel_ray(static_cast<double>(x), static_cast<double>(y),
                                         field.cfg.near, field.cfg.far));
      gts.emplace_back(fr.image.at(0, y, x), fr.image.at(1, y, x), fr.image.at(2, y, x));
    };

    for (Index i = 0; i < tcfg.rays_per_batch; ++i) {
      const Frame& fr = ds.frames[frames[rng.below(static_cast<uint32_t>(frames.size()))]];
      const Index x = rng.below(static_cast<uint32_t>(fr.camera.width));
      const Index y = rng.below(static_cast<uint32_t>(fr.camera.height));
      push_pixel(fr, x, y);
    }
    for (Index p = 0; p < n_patches; ++p) {
      const Frame& fr = ds.frames[frames[rng.below(static_cast<uint32_t>(frames.size()))]];
      check_arg(fr.camera.width >= s && fr.camera.height >= s,
                "train_field: image smaller than patch");
      const Index x0 = rng.below(static_cast<uint32_t>(fr.camera.width - s + 1));
      const Index y0 = rng.below(static_cast<uint32_t>(fr.camera.height - s + 1));
      for (Index dy = 0; dy < s; ++dy)
        for (Index dx = 0; dx < s; ++dx) push_pixel(fr, x0 + dx, y0 + dy);
    }
    const Index r = static_cast<Index>(rays.size());

    std::vector<RaySamples> samples = sample_rays_batch(field, rays, rng);
    std::vector<Vec3> pos;
    std::vector<Vec3> dirs;
    pos.reserve(static_cast<size_t>(r * k));
    dirs.reserve(static_cast<size_t>(r * k));
    Tensor<S> u_t(Shape{r, k}), delta_t(Shape{r, k});
    for (Index i = 0; i < r; ++i) {
      for (Index j = 0; j < k; ++j) {
        const double u = samples[i].u[static_cast<size_t>(j)];
        pos.push_back(rays[static_cast<size_t>(i)].at(u));
        dirs.push_back(rays[static_cast<size_t>(i)].dir);
        u_t.data[i * k + j] = static_cast<S>(u);
        delta_t.data[i * k + j] = static_cast<S>(samples[i].delta[static_cast<size_t>(j)]);
      }
    }

    Tape<S> tape;
    FieldEvalVars<S> ev = field.eval(tape, pos, dirs);
    Var<S> sigma = reshape(ev.sigma, {r, k});
    std::array<Var<S>, 3> color;
    for (Index c = 0; c < 3; ++c) color[c] = reshape(ev.color[c], {r, k});
    CompositeVars<S> comp = composite(tape, sigma, color, u_t, delta_t, field.cfg.background);

    Tensor<S> gt(Shape{r, 3});
    for (Index i = 0; i < r; ++i)
      for (Index c = 0; c < 3; ++c) gt.data[i * 3 + c] = static_cast<S>(gts[i][c]);
    Var<S> mse = mse_loss(tape, comp.rgb, gt, tcfg.mse_mean);

    Var<S> depth_term = tape.constant(Tensor<S>::scalar(S(0)));
    if (n_patches > 0) {
      Var<S> depth_col = reshape(comp.depth, {r, 1});
      for (Index p = 0; p < n_patches; ++p) {
        const Index off = tcfg.rays_per_batch + p * s * s;
        Var<S> patch = reshape(slice2(depth_col, off, s * s, 0, 1), {s, s});
        Var<S> pl = depth_smoothness_loss(tape, patch);
        depth_term = (p == 0) ? pl : depth_term + pl;
      }
    }
    Var<S> loss = total_loss(mse, depth_term, static_cast<S>(tcfg.lambda));

    opt.zero_grad();
    try {
      tape.backward(loss);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("train_field: diverged at step " + std::to_string(step) + ": " +
                               e.what());
    }
    opt.step();

    result.total_curve.push_back(static_cast<double>(loss.val().value()));
    result.mse_curve.push_back(static_cast<double>(mse.val().value()));
    result.depth_curve.push_back(static_cast<double>(depth_term.val().value()));
    if (log && tcfg.log_every > 0 && (step % tcfg.log_every == 0 || step + 1 == tcfg.steps)) {
      (*log) << "field step " << step << " loss " << result.total_curve.back() << " mse "
             << result.mse_curve.back() << " lr " << opt.current_lr() << "\n";
    }
  }
  return result;
}

}  // namespace dgnr
