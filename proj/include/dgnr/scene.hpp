// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Analytic test scenes: solid primitives with constant interior density,
// exact ray intersections and surface distances, plus a quadrature renderer.
// These are the ground-truth oracles for the learned pipeline.
//
// World frame matches the camera convention: x right, y DOWN, z forward.
// The ground plane is solid for y >= level and cameras sit at negative y.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dgnr/camera.hpp"
#include "dgnr/image.hpp"
#include "dgnr/rng.hpp"

namespace dgnr {

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 extent() const { return max - min; }
  double diagonal() const { return extent().norm(); }
  Aabb inflated(double m) const { return Aabb{min.array() - m, max.array() + m}; }
};

struct Primitive {
  enum class Kind { Ground, Box, Sphere };
  Kind kind = Kind::Box;
  Eigen::Vector3f albedo = Eigen::Vector3f(0.5f, 0.5f, 0.5f);
  double density = 50.0;
  // ground
  double level = 0.0;
  // box
  Vec3 box_min = Vec3::Zero(), box_max = Vec3::Ones();
  // sphere
  Vec3 center = Vec3::Zero();
  double radius = 1.0;

  bool contains(const Vec3& p) const;
  // Unsigned distance from p to the primitive's surface.
  double surface_distance(const Vec3& p) const;
  // Entry/exit parameters of the ray against the solid; empty if missed.
  std::optional<std::pair<double, double>> intersect(const Ray& r) const;
};

struct TrajectoryParams {
  Index frames = 60;
  double cam_height = 1.5;  // meters above ground (cameras at y = -cam_height)
  double start_z = 0.0;
  double step = 0.4;
  double lateral_jitter = 0.05;
  double yaw_jitter = 0.01;
  double pitch = 0.12;  // radians, positive pitches the view down
  double fov_deg = 60.0;
  Index width = 96;
  Index height = 96;
  double near = 0.05;
  double far = 45.0;
};

struct SyntheticScene {
  std::vector<Primitive> primitives;
  Eigen::Vector3f background = Eigen::Vector3f(0.65f, 0.78f, 0.95f);
  Aabb bounds;
  TrajectoryParams trajectory;

  // First primitive containing p wins; empty space has zero density.
  double density_at(const Vec3& p) const;
  Eigen::Vector3f albedo_at(const Vec3& p) const;
  // Distance to the nearest primitive surface.
  double surface_distance(const Vec3& p) const;
  // First-surface hit parameter in [near, far], or 0 if the ray escapes.
  double first_hit(const Ray& r) const;

  void validate() const;
};

struct Trajectory {
  std::vector<CameraModel> cameras;
  double near = 0.05;
  double far = 45.0;

  // Frames 0, 10, 20, ... are the held-out test views.
  bool is_test_frame(Index i) const { return i % 10 == 0; }
};

// Deterministic default scene: ground plus two boxes.
SyntheticScene make_scene(uint64_t seed);
// Richer corridor used by the end-to-end tests: ground, boxes lining the
// path, a sphere.
SyntheticScene make_corridor_scene(uint64_t seed);

// JSON round-trip of the scene (primitives, colors, densities, trajectory).
SyntheticScene scene_from_json(const std::string& json_text);
std::string scene_to_json(const SyntheticScene& scene);
SyntheticScene load_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const SyntheticScene& scene);

// Quadrature render of the analytic field (midpoint rule, samples_per_ray
// segments); depth comes from analytic intersections, 0 marks sky.
struct GtRender {
  Image rgb;
  DepthImage depth;
};
GtRender gt_render(const SyntheticScene& scene, const CameraModel& cam, Index samples_per_ray);

Trajectory make_trajectory(const SyntheticScene& scene, Index frames, uint64_t seed);

// Writes images, depth dumps, and the dataset manifest under out_dir.
// Returns the manifest path. Image format is "ppm" or "png".
std::filesystem::path export_dataset(const SyntheticScene& scene, const Trajectory& traj,
                                     const std::filesystem::path& out_dir,
                                     Index samples_per_ray = 512,
                                     const std::string& image_format = "ppm");

}  // namespace dgnr
