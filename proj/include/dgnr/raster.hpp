// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Point rasterization into a multi-resolution pyramid: perspective projection,
// nearest-integer rounding, strict minimum-depth test with lowest-index
// tie-break. Descriptors scatter through the winner maps into per-layer
// feature images via a learnable 1x1 transform; masked-out pixels stay
// exactly zero.
#pragma once

#include <limits>
#include <vector>

#include "dgnr/camera.hpp"
#include "dgnr/image.hpp"
#include "dgnr/parameter.hpp"
#include "dgnr/tape.hpp"

namespace dgnr {

struct RasterConfig {
  Index layers = 4;
  double z_near = 0.05;
};

inline Index layer_dim(Index full, Index layer) {
  const Index scale = Index(1) << layer;
  return std::max<Index>(1, (full + scale - 1) / scale);
}

// Continuous projection of a world point into layer l: camera transform,
// perspective division, then the 1/2^l pyramid scale. Returns false when the
// point is behind the near plane.
inline bool project_point(const Vec3& p, const CameraModel& cam, Index layer, double z_near,
                          double& px, double& py, double& depth) {
  const Vec3 x_cam = cam.R * p + cam.T;
  depth = x_cam.z();
  if (depth <= z_near) return false;
  const double scale = 1.0 / static_cast<double>(Index(1) << layer);
  px = (cam.fx * x_cam.x() / depth + cam.cx) * scale;
  py = (cam.fy * x_cam.y() / depth + cam.cy) * scale;
  return true;
}

// Nearest-integer rounding with the half-up tie break floor(x + 0.5);
// out-of-bounds pixels are rejected.
inline bool round_pixel(double px, double py, Index width, Index height, Index& ix, Index& iy) {
  check_arg(std::isfinite(px) && std::isfinite(py), "round_pixel: non-finite coords");
  ix = static_cast<Index>(std::floor(px + 0.5));
  iy = static_cast<Index>(std::floor(py + 0.5));
  return ix >= 0 && iy >= 0 && ix < width && iy < height;
}

struct PyramidLayer {
  Index width = 0;
  Index height = 0;
  std::vector<int32_t> winner;  // point index per pixel, -1 when empty
  std::vector<float> depth;     // camera-space z of the winner, +inf when empty

  Index pixels() const { return width * height; }

  DepthImage depth_image() const {
    DepthImage img(width, height);
    for (Index i = 0; i < pixels(); ++i)
      img.values.data[i] = std::isinf(depth[static_cast<size_t>(i)])
                               ? 0.0f
                               : depth[static_cast<size_t>(i)];
    return img;
  }
};

struct FeaturePyramid {
  std::vector<PyramidLayer> layers;
};

// Deterministic sequential rasterization; the winner map equals the
// per-pixel lexicographic minimum over (depth, point index).
inline FeaturePyramid rasterize(const std::vector<Vec3>& positions, const CameraModel& cam,
                                const RasterConfig& cfg) {
  check_arg(cfg.layers >= 1, "rasterize: need at least one layer");
  cam.validate();
  FeaturePyramid pyr;
  pyr.layers.resize(static_cast<size_t>(cfg.layers));
  for (Index l = 0; l < cfg.layers; ++l) {
    PyramidLayer& layer = pyr.layers[static_cast<size_t>(l)];
    layer.width = layer_dim(cam.width, l);
    layer.height = layer_dim(cam.height, l);
    layer.winner.assign(static_cast<size_t>(layer.pixels()), -1);
    layer.depth.assign(static_cast<size_t>(layer.pixels()),
                       std::numeric_limits<float>::infinity());
  }
  const Index n = static_cast<Index>(positions.size());
  for (Index i = 0; i < n; ++i) {
    const Vec3 x_cam = cam.R * positions[static_cast<size_t>(i)] + cam.T;
    const double depth = x_cam.z();
    if (depth <= cfg.z_near) continue;
    const double px0 = cam.fx * x_cam.x() / depth + cam.cx;
    const double py0 = cam.fy * x_cam.y() / depth + cam.cy;
    const auto fdepth = static_cast<float>(depth);
    double scale = 1.0;
    for (Index l = 0; l < cfg.layers; ++l, scale *= 0.5) {
      PyramidLayer& layer = pyr.layers[static_cast<size_t>(l)];
      const auto ix = static_cast<Index>(std::floor(px0 * scale + 0.5));
      const auto iy = static_cast<Index>(std::floor(py0 * scale + 0.5));
      if (ix < 0 || iy < 0 || ix >= layer.width || iy >= layer.height) continue;
      const size_t pix = static_cast<size_t>(iy * layer.width + ix);
      const float best = layer.depth[pix];
      if (fdepth < best ||
          (fdepth == best && i < static_cast<Index>(layer.winner[pix]))) {
        layer.depth[pix] = fdepth;
        layer.winner[pix] = static_cast<int32_t>(i);
      }
    }
  }
  return pyr;
}

// Differentiable per-layer feature image: gather the winning descriptors,
// apply the 1x1 transform, zero the empty pixels, and lay out as [C',H,W].
// Gradients flow into the descriptor table rows of winning points only.
template <class S>
Var<S> encode_features(Tape<S>& tape, const PyramidLayer& layer, Var<S> descriptors,
                       Var<S> weight, Var<S> bias) {
  const Index p = layer.pixels();
  const Index c_out = weight.val().shape[1];
  Var<S> gathered = gather_rows(descriptors, layer.winner);  // [P, C], -1 rows zero
  Var<S> feats = linear(gathered, weight, bias);             // [P, C']
  Tensor<S> mask(Shape{p, 1});
  for (Index i = 0; i < p; ++i)
    mask.data[i] = layer.winner[static_cast<size_t>(i)] >= 0 ? S(1) : S(0);
  Var<S> masked = feats * tape.constant(mask);
  return reshape(transpose(masked), {c_out, layer.height, layer.width});
}

// Winner map as CSV rows "y,x,point,depth" (occupied pixels only).
void dump_winner_csv(const std::filesystem::path& path, const PyramidLayer& layer);
// Depth layers as 16-bit grayscale PNGs normalized by far_plane.
void dump_depth_pngs(const std::filesystem::path& dir, const std::string& stem,
                     const FeaturePyramid& pyr, float far_plane);

}  // namespace dgnr
