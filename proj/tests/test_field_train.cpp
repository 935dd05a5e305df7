// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#include "dgnr/train_field.hpp"
#include "doctest.h"

using namespace dgnr;

namespace {

Dataset solid_color_dataset(Index w, Index h, Eigen::Vector3f color) {
  Dataset ds;
  for (int i = 0; i < 2; ++i) {
    Frame f;
    f.camera.fx = f.camera.fy = 40.0;
    f.camera.cx = 0.5 * (w - 1);
    f.camera.cy = 0.5 * (h - 1);
    f.camera.width = w;
    f.camera.height = h;
    f.camera.R = Mat3::Identity();
    f.camera.T = Vec3(0, 0, -0.2 * i);
    f.image = Image(w, h);
    for (Index c = 0; c < 3; ++c)
      for (Index p = 0; p < w * h; ++p) f.image.chw.data[c * w * h + p] = color[c];
    ds.frames.push_back(std::move(f));
  }
  return ds;
}

FieldConfig smoke_config() {
  FieldConfig cfg;
  cfg.grid.levels = 6;
  cfg.grid.table_size = 1 << 12;
  cfg.grid.features = 2;
  cfg.grid.base_resolution = 4;
  cfg.grid.finest_resolution = 64;
  cfg.grid.bounds = Aabb{Vec3(-2, -2, 0), Vec3(2, 2, 6)};
  cfg.hidden = 32;
  cfg.geo_features = 7;
  cfg.near = 0.05;
  cfg.far = 5.0;
  cfg.coarse_samples = 16;
  cfg.fine_samples = 8;
  return cfg;
}

}  // namespace

TEST_CASE("train_field: solid color view converges 10x in 200 steps") {
  Dataset ds = solid_color_dataset(32, 32, Eigen::Vector3f(0.8f, 0.3f, 0.2f));
  RadianceField<float> field(smoke_config(), 123);
  FieldTrainConfig tcfg;
  tcfg.steps = 200;
  tcfg.rays_per_batch = 128;
  tcfg.pixel_rays_per_patch = 64;
  tcfg.s_patch = 4;
  auto result = train_field(field, ds, {0, 1}, tcfg, 9);
  REQUIRE(result.mse_curve.size() == 200);
  CHECK(result.mse_curve.back() <= result.mse_curve.front() / 10.0);
}

TEST_CASE("train_field: fixed seed reproduces the loss curve") {
  Dataset ds = solid_color_dataset(16, 16, Eigen::Vector3f(0.2f, 0.6f, 0.9f));
  FieldTrainConfig tcfg;
  tcfg.steps = 20;
  tcfg.rays_per_batch = 64;
  tcfg.pixel_rays_per_patch = 32;
  tcfg.s_patch = 4;
  std::vector<double> curves[2];
  for (int rep = 0; rep < 2; ++rep) {
    RadianceField<float> field(smoke_config(), 123);
    auto result = train_field(field, ds, {0, 1}, tcfg, 77);
    curves[rep] = result.total_curve;
  }
  REQUIRE(curves[0].size() == curves[1].size());
  for (size_t i = 0; i < curves[0].size(); ++i) CHECK(curves[0][i] == curves[1][i]);
}

TEST_CASE("train_field: empty dataset rejected") {
  Dataset ds = solid_color_dataset(16, 16, Eigen::Vector3f(0.5f, 0.5f, 0.5f));
  RadianceField<float> field(smoke_config(), 1);
  FieldTrainConfig tcfg;
  tcfg.steps = 1;
  CHECK_THROWS_AS(train_field(field, ds, {}, tcfg, 0), std::invalid_argument);
  CHECK_THROWS_AS(train_field(field, ds, {0}, tcfg, 0), std::invalid_argument);
}
