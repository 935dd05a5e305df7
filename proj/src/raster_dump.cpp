// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#include <fstream>

#include "dgnr/raster.hpp"

namespace dgnr {

void dump_winner_csv(const std::filesystem::path& path, const PyramidLayer& layer) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("dump_winner_csv: cannot open " + path.string());
  os << "y,x,point,depth\n";
  for (Index y = 0; y < layer.height; ++y)
    for (Index x = 0; x < layer.width; ++x) {
      const size_t pix = static_cast<size_t>(y * layer.width + x);
      if (layer.winner[pix] < 0) continue;
      os << y << "," << x << "," << layer.winner[pix] << "," << layer.depth[pix] << "\n";
    }
}

void dump_depth_pngs(const std::filesystem::path& dir, const std::string& stem,
                     const FeaturePyramid& pyr, float far_plane) {
  std::filesystem::create_directories(dir);
  for (size_t l = 0; l < pyr.layers.size(); ++l) {
    DepthImage img = pyr.layers[l].depth_image();
    write_png_gray16(dir / (stem + "_l" + std::to_string(l) + ".png"), img, far_plane);
  }
}

}  // namespace dgnr
