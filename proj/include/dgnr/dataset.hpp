// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Posed-image dataset: one manifest line per frame,
//   image=<path> fx=<f> fy=<f> cx=<f> cy=<f> w2c=<16 comma-separated floats,
//   row-major>
// Image paths are relative to the manifest. The train/test split is
// positional: every tenth frame (0, 10, 20, ...) is held out.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dgnr/camera.hpp"
#include "dgnr/image.hpp"

namespace dgnr {

struct Frame {
  CameraModel camera;
  std::string image_rel;  // path as written in the manifest
  Image image;
};

struct Dataset {
  std::vector<Frame> frames;
  std::filesystem::path root;

  bool is_test_frame(Index i) const { return i % 10 == 0; }
  std::vector<Index> train_indices() const {
    std::vector<Index> out;
    for (Index i = 0; i < static_cast<Index>(frames.size()); ++i)
      if (!is_test_frame(i)) out.push_back(i);
    return out;
  }
  std::vector<Index> test_indices() const {
    std::vector<Index> out;
    for (Index i = 0; i < static_cast<Index>(frames.size()); ++i)
      if (is_test_frame(i)) out.push_back(i);
    return out;
  }
};

std::string format_manifest_line(const std::string& image_rel, const CameraModel& cam);
// Parses one manifest line; image sizes are not known until the image loads.
CameraModel parse_manifest_line(const std::string& line, std::string& image_rel_out);

// Loads the manifest and all referenced images.
Dataset load_dataset(const std::filesystem::path& manifest_path);

}  // namespace dgnr
