// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-resolution hash-grid position encoding: per level, trilinear
// interpolation of 8 hashed corner entries, concatenated across levels.
// Levels small enough for a dense vertex table index directly; finer levels
// use the usual 3-prime spatial hash.
#pragma once

#include <cmath>
#include <vector>

#include "dgnr/camera.hpp"
#include "dgnr/parameter.hpp"
#include "dgnr/rng.hpp"
#include "dgnr/scene.hpp"
#include "dgnr/tape.hpp"

namespace dgnr {

struct HashGridConfig {
  Index levels = 16;
  Index table_size = Index(1) << 19;  // entries per level
  Index features = 2;
  Index base_resolution = 16;
  Index finest_resolution = 2048;
  Aabb bounds{Vec3(-1, -1, -1), Vec3(1, 1, 1)};

  Index encoded_width() const { return levels * features; }
};

inline std::vector<Index> hash_grid_resolutions(const HashGridConfig& cfg) {
  std::vector<Index> res;
  res.reserve(cfg.levels);
  const double growth =
      cfg.levels > 1 ? std::exp(std::log(static_cast<double>(cfg.finest_resolution) /
                                         static_cast<double>(cfg.base_resolution)) /
                                static_cast<double>(cfg.levels - 1))
                     : 1.0;
  Index prev = 0;
  for (Index l = 0; l < cfg.levels; ++l) {
    auto r = static_cast<Index>(
        std::floor(static_cast<double>(cfg.base_resolution) * std::pow(growth, l)));
    r = std::max(r, prev + 1);  // strictly increasing
    res.push_back(r);
    prev = r;
  }
  return res;
}

template <class S>
struct HashGrid {
  HashGridConfig cfg;
  std::vector<Index> resolutions;
  Parameter<S> table;  // [levels * table_size, features]

  HashGrid() = default;
  HashGrid(HashGridConfig c, uint64_t seed, std::string name = "field.hash_table")
      : cfg(c), resolutions(hash_grid_resolutions(c)) {
    Rng rng(derive_seed(seed, "hash_table"));
    table = Parameter<S>(std::move(name),
                         Tensor<S>::uniform({cfg.levels * cfg.table_size, cfg.features}, rng,
                                            S(-1e-4), S(1e-4)));
  }

  // Vertex -> row within one level's table slice.
  Index vertex_index(Index level, Index vx, Index vy, Index vz) const {
    const Index n = resolutions[level] + 1;  // vertices per axis
    if (n * n * n <= cfg.table_size) return (vz * n + vy) * n + vx;
    constexpr uint32_t p1 = 1u, p2 = 2654435761u, p3 = 805459861u;
    uint32_t h = static_cast<uint32_t>(vx) * p1 ^ static_cast<uint32_t>(vy) * p2 ^
                 static_cast<uint32_t>(vz) * p3;
    return static_cast<Index>(h % static_cast<uint32_t>(cfg.table_size));
  }

  // Emits 8 (row, weight) pairs per point per level into flat arrays of size
  // P*8, level-local. Rows are global (level offset included).
  void corners(Index level, const std::vector<Vec3>& pos, std::vector<int32_t>& idx,
               std::vector<S>& w) const {
    const Index p = static_cast<Index>(pos.size());
    idx.resize(p * 8);
    w.resize(p * 8);
    const Index res = resolutions[level];
    const Index row0 = level * cfg.table_size;
    const Vec3 lo = cfg.bounds.min;
    const Vec3 inv_extent = cfg.bounds.extent().cwiseMax(1e-12).cwiseInverse();
    for (Index i = 0; i < p; ++i) {
      check_arg(pos[i].allFinite(), "hash_encode: non-finite position");
      Vec3 x01 = (pos[i] - lo).cwiseProduct(inv_extent).cwiseMax(0.0).cwiseMin(1.0);
      Vec3 scaled = x01 * static_cast<double>(res);
      Index c0[3];
      double frac[3];
      for (int a = 0; a < 3; ++a) {
        auto f = static_cast<Index>(std::floor(scaled[a]));
        f = std::min(f, res - 1);
        c0[a] = f;
        frac[a] = scaled[a] - static_cast<double>(f);
      }
      for (int corner = 0; corner < 8; ++corner) {
        const Index dx = corner & 1, dy = (corner >> 1) & 1, dz = (corner >> 2) & 1;
        double weight = (dx ? frac[0] : 1.0 - frac[0]) * (dy ? frac[1] : 1.0 - frac[1]) *
                        (dz ? frac[2] : 1.0 - frac[2]);
        idx[i * 8 + corner] = static_cast<int32_t>(
            row0 + vertex_index(level, c0[0] + dx, c0[1] + dy, c0[2] + dz));
        w[i * 8 + corner] = static_cast<S>(weight);
      }
    }
  }
};

// Differentiable encoding: [P, levels*features].
template <class S>
Var<S> hash_encode(Tape<S>& tape, HashGrid<S>& grid, const std::vector<Vec3>& pos) {
  Var<S> table = tape.param(grid.table);
  std::vector<Var<S>> parts;
  parts.reserve(grid.cfg.levels);
  std::vector<int32_t> idx;
  std::vector<S> w;
  for (Index l = 0; l < grid.cfg.levels; ++l) {
    grid.corners(l, pos, idx, w);
    parts.push_back(weighted_gather(table, idx, w, 8));
  }
  return concat_cols(parts);
}

// Inference-path encoding without a tape.
template <class S>
Tensor<S> hash_encode_raw(const HashGrid<S>& grid, const std::vector<Vec3>& pos) {
  const Index p = static_cast<Index>(pos.size());
  const Index f = grid.cfg.features;
  Tensor<S> out(Shape{p, grid.cfg.levels * f});
  std::vector<int32_t> idx;
  std::vector<S> w;
  for (Index l = 0; l < grid.cfg.levels; ++l) {
    grid.corners(l, pos, idx, w);
    for (Index i = 0; i < p; ++i) {
      auto row = out.data.segment(i * grid.cfg.levels * f + l * f, f);
      for (int corner = 0; corner < 8; ++corner) {
        row += grid.table.value.data.segment(
                   static_cast<Index>(idx[i * 8 + corner]) * f, f) *
               w[i * 8 + corner];
      }
    }
  }
  return out;
}

}  // namespace dgnr
