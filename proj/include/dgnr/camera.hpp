// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "dgnr/tensor.hpp"

namespace dgnr {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 dir = Vec3::UnitZ();  // unit length
  double near = 0.05;
  double far = 100.0;

  Vec3 at(double u) const { return origin + u * dir; }
};

inline void validate_ray(const Ray& r) {
  check_arg(std::abs(r.dir.norm() - 1.0) <= 1e-6, "Ray: direction must be unit length");
  check_arg(r.near > 0.0 && r.near < r.far, "Ray: require 0 < near < far");
}

// Pinhole camera. World-to-camera: x_cam = R * x_world + T; camera axes are
// x right, y down, z forward. Pixel (i,j) centers sit at continuous
// coordinates (x=j, y=i), so projection and nearest-integer rounding map a
// pixel ray back onto its own pixel.
struct CameraModel {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  Mat3 R = Mat3::Identity();
  Vec3 T = Vec3::Zero();
  Index width = 0, height = 0;

  Vec3 center() const { return -(R.transpose() * T); }

  Mat4 world_to_cam() const {
    Mat4 m = Mat4::Identity();
    m.block<3, 3>(0, 0) = R;
    m.block<3, 1>(0, 3) = T;
    return m;
  }

  static CameraModel from_w2c(double fx, double fy, double cx, double cy, const Mat4& w2c,
                              Index w, Index h) {
    CameraModel c;
    c.fx = fx;
    c.fy = fy;
    c.cx = cx;
    c.cy = cy;
    c.R = w2c.block<3, 3>(0, 0);
    c.T = w2c.block<3, 1>(0, 3);
    c.width = w;
    c.height = h;
    return c;
  }

  void validate() const {
    check_arg(fx > 0 && fy > 0, "CameraModel: fx, fy must be positive");
    Mat3 should_be_id = R * R.transpose();
    check_arg((should_be_id - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-5,
              "CameraModel: R must be orthonormal");
  }

  // World ray through pixel center (px, py) = (x=j, y=i).
  Ray pixel_ray(double px, double py, double near, double far) const {
    Vec3 dir_cam((px - cx) / fx, (py - cy) / fy, 1.0);
    Vec3 dir_world = R.transpose() * dir_cam;
    Ray r;
    r.origin = center();
    r.dir = dir_world.normalized();
    r.near = near;
    r.far = far;
    return r;
  }

  // Scale from camera-space z depth to parameter along the (normalized) ray
  // direction of pixel (px, py).
  double depth_to_ray_scale(double px, double py) const {
    Vec3 dir_cam((px - cx) / fx, (py - cy) / fy, 1.0);
    return dir_cam.norm();
  }
};

}  // namespace dgnr
