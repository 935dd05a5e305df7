// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dgnr/tensor.hpp"

namespace dgnr {

// RGB image in [0,1], stored channel-major [3,H,W] to match the network
// layout.
struct Image {
  Index width = 0;
  Index height = 0;
  Tensor<float> chw;

  Image() = default;
  Image(Index w, Index h) : width(w), height(h), chw(Shape{3, h, w}) {}

  float& at(Index c, Index y, Index x) { return chw.data[(c * height + y) * width + x]; }
  float at(Index c, Index y, Index x) const { return chw.data[(c * height + y) * width + x]; }
  Index pixels() const { return width * height; }
};

// 32-bit float scalar image (depth maps).
struct DepthImage {
  Index width = 0;
  Index height = 0;
  Tensor<float> values;

  DepthImage() = default;
  DepthImage(Index w, Index h) : width(w), height(h), values(Shape{h, w}) {}
  float& at(Index y, Index x) { return values.data[y * width + x]; }
  float at(Index y, Index x) const { return values.data[y * width + x]; }
};

// PPM (P6) and PNG, picked by file extension. Values clamp to [0,1] and
// quantize to 8 bits.
void write_image(const std::filesystem::path& path, const Image& img);
Image read_image(const std::filesystem::path& path);

// 16-bit grayscale PNG of values normalized by `scale` (v/scale clamped to
// [0,1]); used for depth-layer debug dumps.
void write_png_gray16(const std::filesystem::path& path, const DepthImage& img, float scale);

// Raw float32 depth with a 16-byte header (magic "DPTH", u32 W, u32 H, u32
// reserved).
void write_depth_raw(const std::filesystem::path& path, const DepthImage& img);
DepthImage read_depth_raw(const std::filesystem::path& path);

}  // namespace dgnr
