// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// The explicit density space: points placed at expected ray depth, one
// learnable descriptor row per point, sequential block fusion, voxel
// deduplication, radius outlier removal, and perceptual-score-driven
// completion.
#pragma once

#include <cstdint>
#include <filesystem>
#include <unordered_map>
#include <vector>

#include "dgnr/camera.hpp"
#include "dgnr/image.hpp"
#include "dgnr/scene.hpp"
#include "dgnr/volume.hpp"

namespace dgnr {

struct DensityPoint {
  Eigen::Vector3f position = Eigen::Vector3f::Zero();
  int32_t descriptor = 0;  // row into the descriptor table; kept equal to the
                           // point's index by every operation here
  int32_t block_id = 0;
  uint8_t source = 0;  // 0 = extracted, 1 = completed
};

struct DensitySpace {
  std::vector<DensityPoint> points;
  Tensor<float> descriptors;  // [N, C]

  Index size() const { return static_cast<Index>(points.size()); }
  Index descriptor_dim() const {
    return descriptors.rank() == 2 ? descriptors.shape[1] : 0;
  }

  void validate() const {
    check_arg(descriptors.rank() == 2 && descriptors.shape[0] == size(),
              "DensitySpace: one descriptor row per point required");
    for (Index i = 0; i < size(); ++i) {
      check_arg(points[static_cast<size_t>(i)].descriptor == static_cast<int32_t>(i),
                "DensitySpace: descriptor index out of step");
      check_arg(points[static_cast<size_t>(i)].position.allFinite(),
                "DensitySpace: non-finite position");
    }
  }

  template <class S>
  std::vector<Vec3> positions_as() const {
    std::vector<Vec3> out(points.size());
    for (size_t i = 0; i < points.size(); ++i) out[i] = points[i].position.cast<double>();
    return out;
  }
};

inline DensitySpace make_space(std::vector<DensityPoint> pts, Tensor<float> desc) {
  DensitySpace s;
  s.points = std::move(pts);
  for (size_t i = 0; i < s.points.size(); ++i)
    s.points[i].descriptor = static_cast<int32_t>(i);
  s.descriptors = std::move(desc);
  s.validate();
  return s;
}

// ---- block partitioning ----

struct Block {
  Index begin = 0;  // first frame (inclusive)
  Index end = 0;    // past-the-end frame
  Aabb cam_box;
};

inline std::vector<Block> partition_scene(const std::vector<Vec3>& cam_positions,
                                          Index capacity) {
  check_arg(!cam_positions.empty(), "partition_scene: empty pose list");
  check_arg(capacity >= 1, "partition_scene: capacity must be >= 1");
  const Index n = static_cast<Index>(cam_positions.size());
  std::vector<Block> blocks;
  for (Index begin = 0; begin < n; begin += capacity) {
    Block b;
    b.begin = begin;
    b.end = std::min(begin + capacity, n);
    b.cam_box.min = b.cam_box.max = cam_positions[static_cast<size_t>(begin)];
    for (Index i = begin; i < b.end; ++i) {
      const Vec3& p = cam_positions[static_cast<size_t>(i)];
      b.cam_box.min = b.cam_box.min.cwiseMin(p);
      b.cam_box.max = b.cam_box.max.cwiseMax(p);
    }
    blocks.push_back(b);
  }
  return blocks;
}

// ---- extraction ----

struct ExtractConfig {
  double opacity_min = 0.5;    // rays below this emit nothing
  Index pixel_stride = 1;      // subsample the pixel grid
  double descriptor_init = 0.01;
  Index descriptor_dim = 8;
};

// Extracts one density point per sufficiently opaque training ray at
// p = o + depth * d. Warns (does not fail) on an untrained field.
template <class FieldT>
DensitySpace extract_points(const FieldT& field, const std::vector<CameraModel>& views,
                            const ExtractConfig& cfg, int32_t block_id, uint64_t seed,
                            std::ostream* log = nullptr) {
  if (field.looks_untrained() && log)
    (*log) << "extract_points: warning: field parameters look untrained (all-zero table)\n";
  std::vector<DensityPoint> pts;
  Rng render_rng(derive_seed(seed, "extract_render", static_cast<uint64_t>(block_id)));
  for (const CameraModel& cam : views) {
    std::vector<Ray> rays;
    rays.reserve(static_cast<size_t>((cam.width / cfg.pixel_stride + 1) *
                                     (cam.height / cfg.pixel_stride + 1)));
    for (Index y = 0; y < cam.height; y += cfg.pixel_stride)
      for (Index x = 0; x < cam.width; x += cfg.pixel_stride)
        rays.push_back(cam.pixel_ray(static_cast<double>(x), static_cast<double>(y),
                                     field.cfg.near, field.cfg.far));
    std::vector<CompositeRaw> shaded = render_rays_raw(field, rays, render_rng);
    for (size_t i = 0; i < rays.size(); ++i) {
      if (shaded[i].opacity < cfg.opacity_min) continue;
      DensityPoint p;
      p.position = (rays[i].origin + shaded[i].depth * rays[i].dir).cast<float>();
      p.block_id = block_id;
      p.source = 0;
      pts.push_back(p);
    }
  }
  Rng desc_rng(derive_seed(seed, "descriptors", static_cast<uint64_t>(block_id)));
  Tensor<float> desc = Tensor<float>::uniform(
      {static_cast<Index>(pts.size()), cfg.descriptor_dim}, desc_rng,
      static_cast<float>(-cfg.descriptor_init), static_cast<float>(cfg.descriptor_init));
  return make_space(std::move(pts), std::move(desc));
}

// ---- voxel utilities ----

namespace detail {

inline uint64_t voxel_key(const Eigen::Vector3f& p, double cell) {
  constexpr int64_t kOffset = int64_t(1) << 20;
  uint64_t key = 0;
  for (int a = 0; a < 3; ++a) {
    auto q = static_cast<int64_t>(std::floor(static_cast<double>(p[a]) / cell)) + kOffset;
    check_arg(q >= 0 && q < (int64_t(1) << 21), "voxel grid: coordinate out of range");
    key = (key << 21) | static_cast<uint64_t>(q);
  }
  return key;
}

inline Vec3 voxel_center(const Eigen::Vector3f& p, double cell) {
  Vec3 c;
  for (int a = 0; a < 3; ++a)
    c[a] = (std::floor(static_cast<double>(p[a]) / cell) + 0.5) * cell;
  return c;
}

}  // namespace detail

// Keeps, per occupied voxel, the point closest to the voxel center (ties by
// lowest index). Output preserves original point order.
inline DensitySpace voxel_dedupe(const DensitySpace& space, double cell) {
  check_arg(cell > 0, "voxel_dedupe: cell size must be positive");
  std::unordered_map<uint64_t, Index> best;  // voxel -> winning point index
  best.reserve(space.points.size());
  for (Index i = 0; i < space.size(); ++i) {
    const auto& p = space.points[static_cast<size_t>(i)];
    const uint64_t key = detail::voxel_key(p.position, cell);
    auto [it, inserted] = best.try_emplace(key, i);
    if (inserted) continue;
    const auto& q = space.points[static_cast<size_t>(it->second)];
    const Vec3 center = detail::voxel_center(p.position, cell);
    const double dp = (p.position.cast<double>() - center).squaredNorm();
    const double dq = (q.position.cast<double>() - center).squaredNorm();
    if (dp < dq) it->second = i;  // ties keep the lower index already stored
  }
  std::vector<char> keep(space.points.size(), 0);
  for (const auto& [key, idx] : best) keep[static_cast<size_t>(idx)] = 1;
  std::vector<DensityPoint> pts;
  std::vector<Index> rows;
  for (Index i = 0; i < space.size(); ++i)
    if (keep[static_cast<size_t>(i)]) {
      pts.push_back(space.points[static_cast<size_t>(i)]);
      rows.push_back(i);
    }
  const Index c = space.descriptor_dim();
  Tensor<float> desc(Shape{static_cast<Index>(rows.size()), c});
  for (size_t i = 0; i < rows.size(); ++i)
    desc.data.segment(static_cast<Index>(i) * c, c) = space.descriptors.data.segment(rows[i] * c, c);
  return make_space(std::move(pts), std::move(desc));
}

// Fuses a new block into the accumulated space: the new block keeps its whole
// space ("buffer for the nearby area"); from the previous space only points
// outside the block's inflated camera box survive. The union is then voxel
// deduplicated, new-block points winning ties.
inline DensitySpace merge_blocks(const DensitySpace& previous, const DensitySpace& current,
                                 const Aabb& block_box_inflated, double dedupe_cell) {
  std::vector<DensityPoint> pts = current.points;
  std::vector<Index> prev_rows;
  for (Index i = 0; i < previous.size(); ++i) {
    const auto& p = previous.points[static_cast<size_t>(i)];
    if (!block_box_inflated.contains(p.position.cast<double>())) {
      pts.push_back(p);
      prev_rows.push_back(i);
    }
  }
  const Index c = current.descriptor_dim() > 0 ? current.descriptor_dim()
                                               : previous.descriptor_dim();
  Tensor<float> desc(Shape{static_cast<Index>(pts.size()), c});
  if (current.size() > 0) desc.data.segment(0, current.size() * c) = current.descriptors.data;
  for (size_t i = 0; i < prev_rows.size(); ++i)
    desc.data.segment((current.size() + static_cast<Index>(i)) * c, c) =
        previous.descriptors.data.segment(prev_rows[i] * c, c);
  DensitySpace merged = make_space(std::move(pts), std::move(desc));
  return voxel_dedupe(merged, dedupe_cell);
}

// Exact radius neighbor counting on a voxel grid; a point stays iff at least
// k other points lie within distance r. k = 0 keeps everything.
inline DensitySpace remove_outliers(const DensitySpace& space, double radius, Index k) {
  check_arg(radius > 0, "remove_outliers: radius must be positive");
  if (k <= 0 || space.size() == 0) return space;
  std::unordered_map<uint64_t, std::vector<Index>> grid;
  grid.reserve(space.points.size());
  for (Index i = 0; i < space.size(); ++i)
    grid[detail::voxel_key(space.points[static_cast<size_t>(i)].position, radius)].push_back(i);
  const double r2 = radius * radius;
  std::vector<char> keep(space.points.size(), 0);
  for (Index i = 0; i < space.size(); ++i) {
    const Eigen::Vector3f& pi = space.points[static_cast<size_t>(i)].position;
    Index count = 0;
    const auto base = pi.cast<double>() / radius;
    const Eigen::Vector3i cell(static_cast<int>(std::floor(base.x())),
                               static_cast<int>(std::floor(base.y())),
                               static_cast<int>(std::floor(base.z())));
    for (int dz = -1; dz <= 1 && count < k; ++dz)
      for (int dy = -1; dy <= 1 && count < k; ++dy)
        for (int dx = -1; dx <= 1 && count < k; ++dx) {
          Eigen::Vector3f probe(static_cast<float>((cell.x() + dx + 0.5) * radius),
                                static_cast<float>((cell.y() + dy + 0.5) * radius),
                                static_cast<float>((cell.z() + dz + 0.5) * radius));
          auto it = grid.find(detail::voxel_key(probe, radius));
          if (it == grid.end()) continue;
          for (Index j : it->second) {
            if (j == i) continue;
            if ((space.points[static_cast<size_t>(j)].position - pi).squaredNorm() <= r2) {
              if (++count >= k) break;
            }
          }
        }
    keep[static_cast<size_t>(i)] = count >= k ? 1 : 0;
  }
  std::vector<DensityPoint> pts;
  std::vector<Index> rows;
  for (Index i = 0; i < space.size(); ++i)
    if (keep[static_cast<size_t>(i)]) {
      pts.push_back(space.points[static_cast<size_t>(i)]);
      rows.push_back(i);
    }
  const Index c = space.descriptor_dim();
  Tensor<float> desc(Shape{static_cast<Index>(rows.size()), c});
  for (size_t i = 0; i < rows.size(); ++i)
    desc.data.segment(static_cast<Index>(i) * c, c) =
        space.descriptors.data.segment(rows[i] * c, c);
  return make_space(std::move(pts), std::move(desc));
}

// ---- completion ----

struct PatchScores {
  Index patch_rows = 0;
  Index patch_cols = 0;
  // scores[view][row * patch_cols + col]
  std::vector<std::vector<float>> scores;

  double mean() const {
    double total = 0;
    Index n = 0;
    for (const auto& v : scores)
      for (float s : v) {
        total += s;
        ++n;
      }
    return n > 0 ? total / static_cast<double>(n) : 0.0;
  }
};

struct CompletionConfig {
  bool select_below = true;  // select patches scoring lower than half the mean
  Index n_add = 4;
  Index s_patch = 8;
  double descriptor_init = 0.01;
};

struct CompletionStats {
  Index patches_selected = 0;
  Index patches_skipped = 0;  // selected but without any valid neighbor depth
  Index points_added = 0;
};

// Inserts n_add points along each pixel ray of every selected patch, spread
// over the [min, max] range of the 8 neighboring pixels' rasterized depths
// (camera-space z from the layer-0 depth buffer; 0 marks empty pixels).
inline CompletionStats complete_points(DensitySpace& space,
                                       const std::vector<CameraModel>& views,
                                       const std::vector<DepthImage>& depth0,
                                       const PatchScores& scores, const CompletionConfig& cfg,
                                       double near, double far, uint64_t seed) {
  check_arg(views.size() == depth0.size() && views.size() == scores.scores.size(),
            "complete_points: view/depth/score count mismatch");
  CompletionStats stats;
  const double threshold = 0.5 * scores.mean();
  std::vector<DensityPoint> added;
  for (size_t v = 0; v < views.size(); ++v) {
    const CameraModel& cam = views[v];
    const DepthImage& depth = depth0[v];
    for (Index pr = 0; pr < scores.patch_rows; ++pr)
      for (Index pc = 0; pc < scores.patch_cols; ++pc) {
        const float score = scores.scores[v][pr * scores.patch_cols + pc];
        const bool selected = cfg.select_below ? (score < threshold) : (score > threshold);
        if (!selected) continue;
        ++stats.patches_selected;
        bool any_valid = false;
        for (Index dy = 0; dy < cfg.s_patch; ++dy)
          for (Index dx = 0; dx < cfg.s_patch; ++dx) {
            const Index y = pr * cfg.s_patch + dy;
            const Index x = pc * cfg.s_patch + dx;
            if (y >= cam.height || x >= cam.width) continue;
            double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
            for (Index ny = y - 1; ny <= y + 1; ++ny)
              for (Index nx = x - 1; nx <= x + 1; ++nx) {
                if (ny == y && nx == x) continue;
                if (ny < 0 || nx < 0 || ny >= cam.height || nx >= cam.width) continue;
                const double d = depth.at(ny, nx);
                if (d <= 0.0) continue;
                dmin = std::min(dmin, d);
                dmax = std::max(dmax, d);
              }
            if (!(dmin <= dmax)) continue;  // no valid neighbor depth
            any_valid = true;
            const Ray ray = cam.pixel_ray(static_cast<double>(x), static_cast<double>(y),
                                          near, far);
            const double scale = cam.depth_to_ray_scale(static_cast<double>(x),
                                                        static_cast<double>(y));
            for (Index j = 0; j < cfg.n_add; ++j) {
              const double z = dmin + (static_cast<double>(j) + 0.5) /
                                          static_cast<double>(cfg.n_add) * (dmax - dmin);
              DensityPoint p;
              p.position = ray.at(z * scale).cast<float>();
              p.block_id = -1;
              p.source = 1;
              added.push_back(p);
            }
          }
        if (!any_valid) {
          --stats.patches_selected;
          ++stats.patches_skipped;
        }
      }
  }
  stats.points_added = static_cast<Index>(added.size());
  const Index c = space.descriptor_dim();
  Rng rng(derive_seed(seed, "completion_descriptors"));
  Tensor<float> fresh = Tensor<float>::uniform({stats.points_added, c}, rng,
                                               static_cast<float>(-cfg.descriptor_init),
                                               static_cast<float>(cfg.descriptor_init));
  Tensor<float> desc(Shape{space.size() + stats.points_added, c});
  desc.data.segment(0, space.descriptors.size()) = space.descriptors.data;
  desc.data.segment(space.descriptors.size(), fresh.size()) = fresh.data;
  std::vector<DensityPoint> pts = space.points;
  pts.insert(pts.end(), added.begin(), added.end());
  space = make_space(std::move(pts), std::move(desc));
  return stats;
}

// ---- binary PLY persistence ----

void save_space(const std::filesystem::path& path, const DensitySpace& space);
DensitySpace load_space(const std::filesystem::path& path);

}  // namespace dgnr
