// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <fstream>

#include "dgnr/dataset.hpp"
#include "dgnr/scene.hpp"

namespace dgnr {

SyntheticScene make_scene(uint64_t seed) {
  Rng rng(derive_seed(seed, "scene"));
  SyntheticScene s;
  s.bounds = Aabb{Vec3(-10, -8, -2), Vec3(10, 1.0, 48)};

  Primitive ground;
  ground.kind = Primitive::Kind::Ground;
  ground.level = 0.0;
  ground.albedo = Eigen::Vector3f(0.36f, 0.40f, 0.34f);
  s.primitives.push_back(ground);

  for (int i = 0; i < 2; ++i) {
    Primitive box;
    box.kind = Primitive::Kind::Box;
    const double side = i == 0 ? -1.0 : 1.0;
    const double x = side * rng.uniform(2.5, 4.0);
    const double z = 6.0 + 8.0 * i + rng.uniform(-1.0, 1.0);
    const double h = rng.uniform(1.5, 3.0);
    const double wx = rng.uniform(0.8, 1.6), wz = rng.uniform(0.8, 1.6);
    box.box_min = Vec3(x - wx, -h, z - wz);
    box.box_max = Vec3(x + wx, 0.0, z + wz);
    box.albedo = Eigen::Vector3f(static_cast<float>(rng.uniform(0.3, 0.9)),
                                 static_cast<float>(rng.uniform(0.3, 0.9)),
                                 static_cast<float>(rng.uniform(0.3, 0.9)));
    s.primitives.push_back(box);
  }
  s.validate();
  return s;
}

SyntheticScene make_corridor_scene(uint64_t seed) {
  Rng rng(derive_seed(seed, "corridor"));
  SyntheticScene s;
  s.bounds = Aabb{Vec3(-12, -9, -4), Vec3(12, 1.0, 60)};

  Primitive ground;
  ground.kind = Primitive::Kind::Ground;
  ground.level = 0.0;
  ground.albedo = Eigen::Vector3f(0.38f, 0.37f, 0.33f);
  s.primitives.push_back(ground);

  // Buildings alternating along both sides of the path.
  for (int i = 0; i < 8; ++i) {
    Primitive box;
    box.kind = Primitive::Kind::Box;
    const double side = (i % 2 == 0) ? -1.0 : 1.0;
    const double x = side * rng.uniform(3.0, 5.0);
    const double z = 4.0 + 5.5 * i + rng.uniform(-1.0, 1.0);
    const double h = rng.uniform(1.8, 4.0);
    const double wx = rng.uniform(1.0, 2.0), wz = rng.uniform(1.0, 2.2);
    box.box_min = Vec3(x - wx, -h, z - wz);
    box.box_max = Vec3(x + wx, 0.0, z + wz);
    box.albedo = Eigen::Vector3f(static_cast<float>(rng.uniform(0.25, 0.95)),
                                 static_cast<float>(rng.uniform(0.25, 0.95)),
                                 static_cast<float>(rng.uniform(0.25, 0.95)));
    s.primitives.push_back(box);
  }

  Primitive ball;
  ball.kind = Primitive::Kind::Sphere;
  ball.center = Vec3(rng.uniform(-1.5, 1.5), -0.9, 30.0 + rng.uniform(-2.0, 2.0));
  ball.radius = 0.9;
  ball.albedo = Eigen::Vector3f(0.85f, 0.45f, 0.25f);
  s.primitives.push_back(ball);

  s.trajectory.frames = 60;
  s.validate();
  return s;
}

GtRender gt_render(const SyntheticScene& scene, const CameraModel& cam, Index samples_per_ray) {
  check_arg(samples_per_ray >= 256, "gt_render: samples_per_ray must be >= 256");
  const double near = scene.trajectory.near, far = scene.trajectory.far;
  GtRender out{Image(cam.width, cam.height), DepthImage(cam.width, cam.height)};
  const double du = (far - near) / static_cast<double>(samples_per_ray);
  for (Index y = 0; y < cam.height; ++y) {
    for (Index x = 0; x < cam.width; ++x) {
      const Ray ray = cam.pixel_ray(static_cast<double>(x), static_cast<double>(y), near, far);
      double transmittance = 1.0;
      Eigen::Vector3d color = Eigen::Vector3d::Zero();
      for (Index k = 0; k < samples_per_ray && transmittance > 1e-7; ++k) {
        const double u = near + (static_cast<double>(k) + 0.5) * du;
        const Vec3 p = ray.at(u);
        const double sigma = scene.density_at(p);
        if (sigma <= 0.0) continue;
        const double alpha = 1.0 - std::exp(-sigma * du);
        color += transmittance * alpha * scene.albedo_at(p).cast<double>();
        transmittance *= 1.0 - alpha;
      }
      color += transmittance * scene.background.cast<double>();
      for (Index c = 0; c < 3; ++c)
        out.rgb.at(c, y, x) = static_cast<float>(color[c]);
      out.depth.at(y, x) = static_cast<float>(scene.first_hit(ray));
    }
  }
  return out;
}

Trajectory make_trajectory(const SyntheticScene& scene, Index frames, uint64_t seed) {
  check_arg(frames >= 2, "make_trajectory: need at least 2 frames");
  const auto& p = scene.trajectory;
  Rng rng(derive_seed(seed, "trajectory"));
  Trajectory traj;
  traj.near = p.near;
  traj.far = p.far;
  const double fx = static_cast<double>(p.width) / (2.0 * std::tan(0.5 * p.fov_deg * M_PI / 180.0));
  const double fy = fx;
  for (Index i = 0; i < frames; ++i) {
    const double z = p.start_z + p.step * static_cast<double>(i);
    const double x = p.lateral_jitter * rng.normal();
    const double yaw = p.yaw_jitter * rng.normal();
    CameraModel cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = 0.5 * static_cast<double>(p.width - 1);
    cam.cy = 0.5 * static_cast<double>(p.height - 1);
    cam.width = p.width;
    cam.height = p.height;
    // Camera-to-world: yaw about y (down), then pitch about x; world y is
    // down so positive pitch looks toward the ground.
    Mat3 c2w = (Eigen::AngleAxisd(yaw, Vec3::UnitY()) *
                Eigen::AngleAxisd(-p.pitch, Vec3::UnitX()))
                   .toRotationMatrix();
    const Vec3 center(x, -p.cam_height, z);
    cam.R = c2w.transpose();
    cam.T = -(cam.R * center);
    cam.validate();
    traj.cameras.push_back(cam);
  }
  return traj;
}

std::filesystem::path export_dataset(const SyntheticScene& scene, const Trajectory& traj,
                                     const std::filesystem::path& out_dir, Index samples_per_ray,
                                     const std::string& image_format) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "depth");
  const fs::path manifest_path = out_dir / "manifest.txt";
  std::ofstream manifest(manifest_path, std::ios::trunc);
  if (!manifest) throw std::runtime_error("export_dataset: cannot open " + manifest_path.string());
  char buf[64];
  for (size_t i = 0; i < traj.cameras.size(); ++i) {
    const CameraModel& cam = traj.cameras[i];
    GtRender r = gt_render(scene, cam, samples_per_ray);
    std::snprintf(buf, sizeof(buf), "frame_%04zu.%s", i, image_format.c_str());
    const std::string image_rel = std::string("images/") + buf;
    write_image(out_dir / image_rel, r.rgb);
    std::snprintf(buf, sizeof(buf), "depth/frame_%04zu.raw", i);
    write_depth_raw(out_dir / buf, r.depth);
    manifest << format_manifest_line(image_rel, cam) << "\n";
  }
  if (!manifest) throw std::runtime_error("export_dataset: manifest write failed");
  return manifest_path;
}

}  // namespace dgnr
