// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Gated-convolution U-Net over the multi-scale neural density features, with
// per-scale feature injection, resize-based cross-scale fusion, detail
// enhancement F_r + F_r .* F_d, and a sigmoid RGB head.
#pragma once

#include <array>
#include <vector>

#include "dgnr/adam.hpp"
#include "dgnr/raster.hpp"

namespace dgnr {

struct RendererConfig {
  Index feature_dim = 8;       // C': channels of the encoded density features
  Index base_width = 16;       // width at full resolution
  std::vector<Index> widths = {16, 24, 32, 32};  // per scale, depth 4
  Index detail_width = 16;
};

// One gated convolution: out = x + elu(conv_f(x)) .* sigmoid(conv_g(x)).
template <class S>
struct GatedConvBlock {
  Parameter<S> wf, bf, wg, bg;

  GatedConvBlock() = default;
  GatedConvBlock(const std::string& name, Index channels, Rng& rng, Index ksize = 3) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(channels * ksize * ksize));
    wf = Parameter<S>(name + ".wf",
                      Tensor<S>::normal({channels, channels, ksize, ksize}, rng,
                                        static_cast<S>(stddev)));
    bf = Parameter<S>(name + ".bf", Tensor<S>({channels}));
    wg = Parameter<S>(name + ".wg",
                      Tensor<S>::normal({channels, channels, ksize, ksize}, rng,
                                        static_cast<S>(stddev)));
    bg = Parameter<S>(name + ".bg", Tensor<S>({channels}));
  }

  void collect(ParamSet<S>& ps) {
    ps.add(wf);
    ps.add(bf);
    ps.add(wg);
    ps.add(bg);
  }
};

template <class S>
Var<S> gated_conv(Tape<S>& tape, Var<S> x, GatedConvBlock<S>& block) {
  Var<S> feat = elu(conv2d(x, tape.param(block.wf), tape.param(block.bf)));
  Var<S> gate = sigmoid(conv2d(x, tape.param(block.wg), tape.param(block.bg)));
  return x + feat * gate;
}

// F_fusion = F_r + F_r .* F_d.
template <class S>
Var<S> detail_enhance(Var<S> reduced, Var<S> detail) {
  check_arg(reduced.val().shape == detail.val().shape, "detail_enhance: shape mismatch");
  return reduced + reduced * detail;
}

template <class S>
struct ConvLayer {
  Parameter<S> w, b;

  ConvLayer() = default;
  ConvLayer(const std::string& name, Index in, Index out, Index k, Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in * k * k));
    w = Parameter<S>(name + ".w", Tensor<S>::normal({out, in, k, k}, rng, static_cast<S>(stddev)));
    b = Parameter<S>(name + ".b", Tensor<S>({out}));
  }

  Var<S> apply(Tape<S>& tape, Var<S> x) {
    return conv2d(x, tape.param(w), tape.param(b));
  }

  void collect(ParamSet<S>& ps) {
    ps.add(w);
    ps.add(b);
  }
};

// Per-layer 1x1 transforms turning scattered descriptors into the neural
// density features consumed by the net.
template <class S>
struct FeatureEncoder {
  std::vector<Parameter<S>> weights;  // [C, C'] each
  std::vector<Parameter<S>> biases;   // [C']

  FeatureEncoder() = default;
  FeatureEncoder(Index layers, Index c_in, Index c_out, uint64_t seed) {
    Rng rng(derive_seed(seed, "feature_encoder"));
    const double stddev = std::sqrt(1.0 / static_cast<double>(c_in));
    for (Index l = 0; l < layers; ++l) {
      weights.emplace_back("encode.l" + std::to_string(l) + ".w",
                           Tensor<S>::normal({c_in, c_out}, rng, static_cast<S>(stddev)));
      biases.emplace_back("encode.l" + std::to_string(l) + ".b", Tensor<S>({c_out}));
    }
  }

  void collect(ParamSet<S>& ps) {
    for (auto& w : weights) ps.add(w);
    for (auto& b : biases) ps.add(b);
  }
};

template <class S>
struct RendererNet {
  RendererConfig cfg;
  ConvLayer<S> head0;                       // C' -> w0
  std::vector<ConvLayer<S>> down;           // concat(prev, NDF_s) -> w_s
  std::vector<GatedConvBlock<S>> enc;       // one per scale
  std::vector<ConvLayer<S>> fuse;           // decoder concat -> w_s
  std::vector<GatedConvBlock<S>> dec;       // scales 1..L-2
  ConvLayer<S> fuse0;                       // 1x1 at full resolution
  ConvLayer<S> reduce;                      // 1x1 -> F_r
  ConvLayer<S> detail1, detail2;            // 3x3 then 1x1 -> F_d
  ConvLayer<S> out_head;                    // 3x3 -> RGB

  RendererNet() = default;
  RendererNet(RendererConfig c, uint64_t seed) : cfg(c) {
    Rng rng(derive_seed(seed, "renderer_net"));
    const auto& w = cfg.widths;
    const Index scales = static_cast<Index>(w.size());
    head0 = ConvLayer<S>("net.head0", cfg.feature_dim, w[0], 3, rng);
    enc.emplace_back("net.enc0", w[0], rng);
    for (Index s = 1; s < scales; ++s) {
      down.emplace_back("net.down" + std::to_string(s), w[s - 1] + cfg.feature_dim, w[s], 3, rng);
      enc.emplace_back("net.enc" + std::to_string(s), w[s], rng);
    }
    for (Index s = scales - 2; s >= 1; --s) {
      fuse.emplace_back("net.fuse" + std::to_string(s), w[s + 1] + w[s], w[s], 3, rng);
      dec.emplace_back("net.dec" + std::to_string(s), w[s], rng);
    }
    fuse0 = ConvLayer<S>("net.fuse0", w[1] + w[0], w[0], 1, rng);
    reduce = ConvLayer<S>("net.reduce", w[0], cfg.detail_width, 1, rng);
    detail1 = ConvLayer<S>("net.detail1", cfg.feature_dim, cfg.detail_width, 3, rng);
    detail2 = ConvLayer<S>("net.detail2", cfg.detail_width, cfg.detail_width, 1, rng);
    out_head = ConvLayer<S>("net.out", cfg.detail_width, 3, 3, rng);
  }

  ParamSet<S> params() {
    ParamSet<S> ps;
    head0.collect(ps);
    for (auto& m : down) m.collect(ps);
    for (auto& m : enc) m.collect(ps);
    for (auto& m : fuse) m.collect(ps);
    for (auto& m : dec) m.collect(ps);
    fuse0.collect(ps);
    reduce.collect(ps);
    detail1.collect(ps);
    detail2.collect(ps);
    out_head.collect(ps);
    return ps;
  }

  // ndf: per-scale feature images [C', H/2^s, W/2^s]. Output RGB [3,H,W] in
  // [0,1] (final sigmoid).
  Var<S> forward(Tape<S>& tape, const std::vector<Var<S>>& ndf) {
    const Index scales = static_cast<Index>(cfg.widths.size());
    check_arg(static_cast<Index>(ndf.size()) == scales,
              "renderer forward: need one feature image per scale");
    std::vector<Var<S>> skips;
    Var<S> x = gated_conv(tape, elu(head0.apply(tape, ndf[0])), enc[0]);
    skips.push_back(x);
    for (Index s = 1; s < scales; ++s) {
      Var<S> pooled = avg_pool2(x);
      // Cross-scale injection; resize handles odd pyramid dims.
      Var<S> feat = ndf[static_cast<size_t>(s)];
      if (feat.val().shape[1] != pooled.val().shape[1] ||
          feat.val().shape[2] != pooled.val().shape[2])
        feat = resize_nearest(feat, pooled.val().shape[1], pooled.val().shape[2]);
      Var<S> cat = concat_axis0(std::vector<Var<S>>{pooled, feat});
      x = gated_conv(tape, elu(down[static_cast<size_t>(s - 1)].apply(tape, cat)),
                     enc[static_cast<size_t>(s)]);
      skips.push_back(x);
    }
    // Decoder with skip fusion; gated blocks at the intermediate scales.
    Index fi = 0;
    for (Index s = scales - 2; s >= 1; --s, ++fi) {
      Var<S> up = resize_nearest(x, skips[static_cast<size_t>(s)].val().shape[1],
                                 skips[static_cast<size_t>(s)].val().shape[2]);
      Var<S> cat = concat_axis0(std::vector<Var<S>>{up, skips[static_cast<size_t>(s)]});
      x = gated_conv(tape, elu(fuse[static_cast<size_t>(fi)].apply(tape, cat)),
                     dec[static_cast<size_t>(fi)]);
    }
    Var<S> up0 = resize_nearest(x, skips[0].val().shape[1], skips[0].val().shape[2]);
    Var<S> cat0 = concat_axis0(std::vector<Var<S>>{up0, skips[0]});
    Var<S> d0 = elu(fuse0.apply(tape, cat0));
    Var<S> f_r = reduce.apply(tape, d0);
    Var<S> f_d = detail2.apply(tape, elu(detail1.apply(tape, ndf[0])));
    Var<S> fused = detail_enhance(f_r, f_d);
    return sigmoid(out_head.apply(tape, fused));
  }
};

// Rasterize + encode + net forward for one camera; pyramids may be supplied
// pre-built (winner maps only depend on geometry).
template <class S>
Var<S> render_view_vars(Tape<S>& tape, const FeaturePyramid& pyr, Var<S> descriptors,
                        FeatureEncoder<S>& encoder, RendererNet<S>& net) {
  const Index scales = static_cast<Index>(net.cfg.widths.size());
  check_arg(static_cast<Index>(pyr.layers.size()) >= scales,
            "render_view: pyramid has fewer layers than the net expects");
  std::vector<Var<S>> ndf;
  for (Index s = 0; s < scales; ++s)
    ndf.push_back(encode_features(tape, pyr.layers[static_cast<size_t>(s)], descriptors,
                                  tape.param(encoder.weights[static_cast<size_t>(s)]),
                                  tape.param(encoder.biases[static_cast<size_t>(s)])));
  return net.forward(tape, ndf);
}

}  // namespace dgnr
