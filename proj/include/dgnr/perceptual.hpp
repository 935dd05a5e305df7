// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Fixed multi-layer conv feature stack for the perceptual loss: seeded random
// weights by default, or real pretrained weights loaded from a checkpoint.
// Non-trainable; gradients flow only through the rendered-image input.
#pragma once

#include <optional>

#include "dgnr/checkpoint.hpp"
#include "dgnr/image.hpp"
#include "dgnr/tape.hpp"

namespace dgnr {

struct PerceptualConfig {
  std::vector<Index> channels = {16, 32, 32, 64, 64};  // five 3x3 conv layers
  std::vector<Index> pool_after = {1, 3};              // avg-pool after these layers
  std::vector<Index> selected = {0, 2, 4};             // layers entering the loss
  uint64_t seed = 416;
  std::string weights_path;  // optional checkpoint with conv{i}.w / conv{i}.b
};

template <class S>
struct PerceptualExtractor {
  PerceptualConfig cfg;
  std::vector<Tensor<S>> kernels;  // fixed, not parameters
  std::vector<Tensor<S>> biases;

  PerceptualExtractor() = default;
  explicit PerceptualExtractor(PerceptualConfig c) : cfg(std::move(c)) {
    check_arg(cfg.channels.size() >= 2, "perceptual: need at least two layers");
    if (!cfg.weights_path.empty()) {
      auto recs = read_checkpoint(cfg.weights_path);
      for (size_t i = 0; i < cfg.channels.size(); ++i) {
        const std::string wn = "conv" + std::to_string(i) + ".w";
        const std::string bn = "conv" + std::to_string(i) + ".b";
        const NamedBlob* wrec = nullptr;
        const NamedBlob* brec = nullptr;
        for (const auto& r : recs) {
          if (r.name == wn) wrec = &r;
          if (r.name == bn) brec = &r;
        }
        if (!wrec || !brec)
          throw std::runtime_error("perceptual: missing " + wn + " in " + cfg.weights_path);
        kernels.push_back(from_blob<S>(*wrec));
        biases.push_back(from_blob<S>(*brec));
      }
    } else {
      Rng rng(derive_seed(cfg.seed, "perceptual"));
      Index in = 3;
      for (size_t i = 0; i < cfg.channels.size(); ++i) {
        const Index out = cfg.channels[i];
        const double stddev = std::sqrt(2.0 / static_cast<double>(in * 9));
        kernels.push_back(Tensor<S>::normal({out, in, 3, 3}, rng, static_cast<S>(stddev)));
        biases.push_back(Tensor<S>({out}));
        in = out;
      }
    }
  }

  bool pools_after(Index layer) const {
    for (Index p : cfg.pool_after)
      if (p == layer) return true;
    return false;
  }

  // Feature maps of the selected layers (post-activation), tape path.
  std::vector<Var<S>> features(Tape<S>& tape, Var<S> image) const {
    std::vector<Var<S>> out;
    Var<S> x = image;
    for (size_t i = 0; i < kernels.size(); ++i) {
      x = elu(conv2d(x, tape.constant(kernels[i]), tape.constant(biases[i])));
      for (Index sel : cfg.selected)
        if (sel == static_cast<Index>(i)) out.push_back(x);
      if (pools_after(static_cast<Index>(i)) && x.val().shape[1] >= 2 &&
          x.val().shape[2] >= 2) {
        // Odd sizes shrink by one row/col before pooling.
        const Index h = x.val().shape[1] & ~Index(1), w = x.val().shape[2] & ~Index(1);
        if (h != x.val().shape[1] || w != x.val().shape[2])
          x = resize_nearest(x, h, w);
        x = avg_pool2(x);
      }
    }
    return out;
  }

  // Raw forward (patch scoring, metrics); returns selected feature maps.
  std::vector<Tensor<S>> features_raw(const Tensor<S>& image) const {
    std::vector<Tensor<S>> out;
    Tensor<S> x = image;
    for (size_t i = 0; i < kernels.size(); ++i) {
      Tensor<S> y;
      conv2d_forward(x, kernels[i], biases[i].ptr(), y);
      for (Index j = 0; j < y.size(); ++j) y.data[j] = elu_s(y.data[j]);
      for (Index sel : cfg.selected)
        if (sel == static_cast<Index>(i)) out.push_back(y);
      x = std::move(y);
      if (pools_after(static_cast<Index>(i)) && x.shape[1] >= 2 && x.shape[2] >= 2) {
        const Index h = x.shape[1] & ~Index(1), w = x.shape[2] & ~Index(1);
        if (h != x.shape[1] || w != x.shape[2]) x = resize_nearest_forward(x, h, w);
        x = avg_pool2_forward(x);
      }
    }
    return out;
  }

  // How much each selected layer's feature map is downscaled vs the input.
  std::vector<Index> selected_scales() const {
    std::vector<Index> scales;
    Index scale = 1;
    for (size_t i = 0; i < kernels.size(); ++i) {
      for (Index sel : cfg.selected)
        if (sel == static_cast<Index>(i)) scales.push_back(scale);
      if (pools_after(static_cast<Index>(i))) scale *= 2;
    }
    return scales;
  }
};

// Sum over selected layers of the mean squared feature difference.
// Differentiable with respect to `rendered` only (the target enters as a
// constant).
template <class S>
Var<S> perceptual_loss(Tape<S>& tape, Var<S> rendered, const Tensor<S>& target,
                       const PerceptualExtractor<S>& extractor) {
  check_arg(rendered.val().shape == target.shape, "perceptual_loss: image shape mismatch");
  std::vector<Var<S>> fa = extractor.features(tape, rendered);
  std::vector<Tensor<S>> fb = extractor.features_raw(target);
  Var<S> total;
  for (size_t i = 0; i < fa.size(); ++i) {
    Var<S> d = fa[i] - tape.constant(fb[i]);
    Var<S> term = mean_all(d * d);
    total = (i == 0) ? term : total + term;
  }
  return total;
}

// Per-patch scores on the S_patch grid: each selected layer's squared
// differences are averaged within the patch footprint, then summed across
// layers. No gradients; pure bookkeeping for the completion rule.
template <class S>
Tensor<float> perceptual_patch_scores(const Tensor<S>& a, const Tensor<S>& b,
                                      const PerceptualExtractor<S>& extractor, Index s_patch) {
  check_arg(a.shape == b.shape, "perceptual_patch_scores: image shape mismatch");
  const Index height = a.shape[1], width = a.shape[2];
  const Index rows = height / s_patch, cols = width / s_patch;
  Tensor<float> scores(Shape{rows, cols});
  Tensor<float> counts(Shape{rows, cols});
  std::vector<Tensor<S>> fa = extractor.features_raw(a);
  std::vector<Tensor<S>> fb = extractor.features_raw(b);
  std::vector<Index> scales = extractor.selected_scales();
  for (size_t li = 0; li < fa.size(); ++li) {
    const Index c = fa[li].shape[0], h = fa[li].shape[1], w = fa[li].shape[2];
    const Index scale = scales[li];
    counts.data.setZero();
    Tensor<float> layer_sum(Shape{rows, cols});
    for (Index y = 0; y < h; ++y) {
      const Index pr = std::min(rows - 1, y * scale / s_patch);
      for (Index x = 0; x < w; ++x) {
        const Index pc = std::min(cols - 1, x * scale / s_patch);
        double acc = 0;
        for (Index ch = 0; ch < c; ++ch) {
          const double d = static_cast<double>(fa[li].data[(ch * h + y) * w + x]) -
                           static_cast<double>(fb[li].data[(ch * h + y) * w + x]);
          acc += d * d;
        }
        layer_sum.data[pr * cols + pc] += static_cast<float>(acc);
        counts.data[pr * cols + pc] += static_cast<float>(c);
      }
    }
    for (Index i = 0; i < scores.size(); ++i)
      if (counts.data[i] > 0) scores.data[i] += layer_sum.data[i] / counts.data[i];
  }
  return scores;
}

}  // namespace dgnr
