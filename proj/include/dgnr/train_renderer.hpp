// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Joint optimization of the renderer parameters and the point descriptors
// against the perceptual loss, plus end-of-run per-patch score bookkeeping
// for the completion rule.
#pragma once

#include <ostream>

#include "dgnr/dataset.hpp"
#include "dgnr/density_space.hpp"
#include "dgnr/perceptual.hpp"
#include "dgnr/renderer.hpp"

namespace dgnr {

struct RendererTrainConfig {
  Index steps = 600;
  double lr = 1e-3;
  double lr_end = 1e-6;
  Index s_patch = 8;
  Index log_every = 100;
};

struct RendererTrainResult {
  std::vector<double> loss_curve;
  PatchScores patch_scores;  // one grid per training frame, manifest order
  double patch_score_mean = 0.0;
};

template <class S>
Tensor<S> image_to_tensor(const Image& img) {
  return img.chw.template cast<S>();
}

inline Image tensor_to_image(const Tensor<float>& t) {
  Image img(t.shape[2], t.shape[1]);
  img.chw = t;
  return img;
}

// Renders one view through the current net with fixed descriptors.
template <class S>
Image render_view(const DensitySpace& space, const CameraModel& cam, RendererNet<S>& net,
                  FeatureEncoder<S>& encoder, const RasterConfig& rcfg) {
  FeaturePyramid pyr = rasterize(space.positions_as<double>(), cam, rcfg);
  Tape<S> tape;
  Var<S> tau = tape.constant(space.descriptors.template cast<S>());
  Var<S> rgb = render_view_vars(tape, pyr, tau, encoder, net);
  Tensor<float> out = rgb.val().template cast<float>();
  return tensor_to_image(out);
}

template <class S>
RendererTrainResult train_renderer(DensitySpace& space, const Dataset& ds,
                                   const std::vector<Index>& train_frames, RendererNet<S>& net,
                                   FeatureEncoder<S>& encoder,
                                   const PerceptualExtractor<S>& extractor,
                                   const RasterConfig& rcfg, const RendererTrainConfig& tcfg,
                                   uint64_t seed, std::ostream* log = nullptr) {
  check_arg(train_frames.size() >= 2, "train_renderer: need at least 2 views");
  space.validate();

  // Winner maps depend only on geometry; build once per view.
  std::vector<FeaturePyramid> pyramids;
  std::vector<Tensor<S>> targets;
  pyramids.reserve(train_frames.size());
  const std::vector<Vec3> positions = space.positions_as<double>();
  for (Index f : train_frames) {
    pyramids.push_back(rasterize(positions, ds.frames[static_cast<size_t>(f)].camera, rcfg));
    targets.push_back(image_to_tensor<S>(ds.frames[static_cast<size_t>(f)].image));
  }

  Parameter<S> tau("space.tau", space.descriptors.template cast<S>());
  ParamSet<S> params = net.params();
  encoder.collect(params);
  params.add(tau);
  Adam<S> opt(params, tcfg.lr, tcfg.lr_end, tcfg.steps);

  RendererTrainResult result;
  result.loss_curve.reserve(static_cast<size_t>(tcfg.steps));
  for (Index step = 0; step < tcfg.steps; ++step) {
    Rng rng(derive_seed(seed, "renderer_step", static_cast<uint64_t>(step)));
    const size_t vi = rng.below(static_cast<uint32_t>(train_frames.size()));
    Tape<S> tape;
    Var<S> rendered = render_view_vars(tape, pyramids[vi], tape.param(tau), encoder, net);
    Var<S> loss = perceptual_loss(tape, rendered, targets[vi], extractor);
    opt.zero_grad();
    try {
      tape.backward(loss);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("train_renderer: diverged at step " + std::to_string(step) +
                               ": " + e.what());
    }
    opt.step();
    result.loss_curve.push_back(static_cast<double>(loss.val().value()));
    if (log && tcfg.log_every > 0 && (step % tcfg.log_every == 0 || step + 1 == tcfg.steps))
      (*log) << "renderer step " << step << " view " << train_frames[vi] << " loss "
             << result.loss_curve.back() << "\n";
  }

  // Final per-patch perceptual scores over the whole training set.
  result.patch_scores.patch_rows = 0;
  for (size_t vi = 0; vi < train_frames.size(); ++vi) {
    Tape<S> tape;
    Var<S> rendered = render_view_vars(tape, pyramids[vi], tape.param(tau), encoder, net);
    Tensor<float> grid =
        perceptual_patch_scores(rendered.val(), targets[vi], extractor, tcfg.s_patch);
    result.patch_scores.patch_rows = grid.shape[0];
    result.patch_scores.patch_cols = grid.shape[1];
    result.patch_scores.scores.emplace_back(grid.ptr(), grid.ptr() + grid.size());
  }
  result.patch_score_mean = result.patch_scores.mean();

  space.descriptors = tau.value.template cast<float>();
  return result;
}

}  // namespace dgnr
