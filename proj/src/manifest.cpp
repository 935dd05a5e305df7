// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dgnr/dataset.hpp"

namespace dgnr {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string format_manifest_line(const std::string& image_rel, const CameraModel& cam) {
  std::ostringstream os;
  os << "image=" << image_rel << " fx=" << fmt_double(cam.fx) << " fy=" << fmt_double(cam.fy)
     << " cx=" << fmt_double(cam.cx) << " cy=" << fmt_double(cam.cy) << " w2c=";
  const Mat4 m = cam.world_to_cam();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      if (r != 0 || c != 0) os << ",";
      os << fmt_double(m(r, c));
    }
  return os.str();
}

CameraModel parse_manifest_line(const std::string& line, std::string& image_rel_out) {
  std::istringstream is(line);
  std::string token;
  double fx = 0, fy = 0, cx = 0, cy = 0;
  Mat4 w2c = Mat4::Identity();
  bool have_image = false, have_w2c = false;
  while (is >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("manifest: malformed token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string val = token.substr(eq + 1);
    if (key == "image") {
      image_rel_out = val;
      have_image = true;
    } else if (key == "fx") {
      fx = std::stod(val);
    } else if (key == "fy") {
      fy = std::stod(val);
    } else if (key == "cx") {
      cx = std::stod(val);
    } else if (key == "cy") {
      cy = std::stod(val);
    } else if (key == "w2c") {
      std::istringstream vs(val);
      std::string num;
      for (int i = 0; i < 16; ++i) {
        if (!std::getline(vs, num, ','))
          throw std::runtime_error("manifest: w2c needs 16 comma-separated floats");
        w2c(i / 4, i % 4) = std::stod(num);
      }
      have_w2c = true;
    } else {
      throw std::runtime_error("manifest: unknown key '" + key + "'");
    }
  }
  if (!have_image || !have_w2c)
    throw std::runtime_error("manifest: line missing image= or w2c=: " + line);
  CameraModel cam = CameraModel::from_w2c(fx, fy, cx, cy, w2c, 0, 0);
  return cam;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is) throw std::runtime_error("load_dataset: cannot open " + manifest_path.string());
  Dataset ds;
  ds.root = manifest_path.parent_path();
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    Frame f;
    f.camera = parse_manifest_line(line, f.image_rel);
    f.image = read_image(ds.root / f.image_rel);
    f.camera.width = f.image.width;
    f.camera.height = f.image.height;
    f.camera.validate();
    ds.frames.push_back(std::move(f));
  }
  if (ds.frames.empty()) throw std::runtime_error("load_dataset: empty manifest");
  return ds;
}

}  // namespace dgnr
