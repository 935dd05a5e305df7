// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>

#include "dgnr/metrics.hpp"
#include "dgnr/pipeline.hpp"
#include "dgnr/scene.hpp"
#include "doctest.h"

using namespace dgnr;
namespace fs = std::filesystem;

namespace {

Image constant_image(Index w, Index h, float r, float g, float b) {
  Image img(w, h);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      img.at(0, y, x) = r;
      img.at(1, y, x) = g;
      img.at(2, y, x) = b;
    }
  return img;
}

// Small dataset + config for pipeline smoke tests.
struct SmokeSetup {
  fs::path dataset_dir;
  fs::path manifest;
  PipelineConfig cfg;

  explicit SmokeSetup(const std::string& name) {
    dataset_dir = fs::temp_directory_path() / name;
    if (!fs::exists(dataset_dir / "manifest.txt")) {
      fs::remove_all(dataset_dir);
      SyntheticScene scene = make_scene(3);
      scene.trajectory.frames = 20;
      scene.trajectory.width = 32;
      scene.trajectory.height = 32;
      scene.trajectory.far = 30.0;
      scene.trajectory.step = 0.35;
      Trajectory traj = make_trajectory(scene, 20, 3);
      export_dataset(scene, traj, dataset_dir, 256, "ppm");
    }
    manifest = dataset_dir / "manifest.txt";

    cfg.seed = 11;
    cfg.block_capacity = 100;
    cfg.field.grid.levels = 6;
    cfg.field.grid.table_size = Index(1) << 13;
    cfg.field.grid.base_resolution = 4;
    cfg.field.grid.finest_resolution = 64;
    cfg.field.hidden = 32;
    cfg.field.geo_features = 7;
    cfg.field.near = 0.05;
    cfg.field.far = 30.0;
    cfg.field.coarse_samples = 24;
    cfg.field.fine_samples = 12;
    cfg.field.background = Eigen::Vector3f(0.65f, 0.78f, 0.95f);
    cfg.field_train.steps = 120;
    cfg.field_train.rays_per_batch = 128;
    cfg.field_train.pixel_rays_per_patch = 32;
    cfg.field_train.s_patch = 8;
    cfg.field_train.lr = 5e-3;
    cfg.field_train.lr_end = 1e-4;
    cfg.field_train.log_every = 0;
    cfg.voxel = 0.08;
    cfg.outlier_radius = 0.24;
    cfg.extract.pixel_stride = 2;
    cfg.renderer.feature_dim = 8;
    cfg.renderer.widths = {8, 8, 12, 12};
    cfg.renderer.detail_width = 8;
    cfg.renderer_train.steps = 60;
    cfg.renderer_train.lr = 3e-3;
    cfg.renderer_train.lr_end = 1e-4;
    cfg.renderer_train.log_every = 0;
    cfg.perceptual.channels = {8, 12, 12, 16, 16};
    cfg.eval_samples_per_ray = 0;
  }
};

bool reports_equal_ex_timing(const EvalReport& a, const EvalReport& b) {
  if (a.views.size() != b.views.size()) return false;
  for (size_t i = 0; i < a.views.size(); ++i) {
    if (a.views[i].frame != b.views[i].frame) return false;
    if (a.views[i].psnr != b.views[i].psnr) return false;
    if (a.views[i].ssim != b.views[i].ssim) return false;
    if (a.views[i].perceptual != b.views[i].perceptual) return false;
  }
  return a.psnr_mean == b.psnr_mean && a.ssim_mean == b.ssim_mean &&
         a.perceptual_mean == b.perceptual_mean && a.field_bytes == b.field_bytes &&
         a.space_bytes == b.space_bytes && a.net_bytes == b.net_bytes &&
         a.tau_bytes == b.tau_bytes;
}

}  // namespace

TEST_CASE("psnr: closed forms and symmetry") {
  Image a = constant_image(8, 8, 0.5f, 0.5f, 0.5f);
  CHECK(psnr(a, a) == doctest::Approx(99.0));
  // MSE 0.01 -> 20 dB
  Image b = constant_image(8, 8, 0.6f, 0.6f, 0.6f);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-5));
  CHECK(psnr(a, b) == doctest::Approx(psnr(b, a)));
  Image c = constant_image(4, 8, 0, 0, 0);
  CHECK_THROWS_AS(psnr(a, c), std::invalid_argument);
}

TEST_CASE("ssim: identity, negation, symmetry, window guard") {
  Rng rng(4);
  Image a(16, 16);
  for (Index i = 0; i < a.chw.size(); ++i)
    a.chw.data[i] = 0.3f + 0.4f * static_cast<float>(rng.uniform());
  CHECK(ssim(a, a) == doctest::Approx(1.0));
  Image neg(16, 16);
  for (Index i = 0; i < a.chw.size(); ++i) neg.chw.data[i] = 1.0f - a.chw.data[i];
  CHECK(ssim(a, neg) < 0.5);
  Rng rng2(5);
  Image b(16, 16);
  for (Index i = 0; i < b.chw.size(); ++i) b.chw.data[i] = static_cast<float>(rng2.uniform());
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
  Image tiny = constant_image(8, 8, 0.5f, 0.5f, 0.5f);
  CHECK_THROWS_AS(ssim(tiny, tiny), std::invalid_argument);
}

TEST_CASE("config: JSON round-trip echoes every field") {
  PipelineConfig cfg;
  cfg.seed = 7;
  cfg.block_capacity = 30;
  cfg.field.grid.levels = 9;
  cfg.field_train.lambda = 2e-5;
  cfg.voxel = 0.05;
  cfg.completion.select_below = false;
  cfg.completion.n_add = 6;
  cfg.renderer.widths = {16, 24, 32, 32};
  cfg.perceptual.selected = {1, 3};
  std::string text = config_to_json(cfg);
  PipelineConfig back = config_from_json(text);
  CHECK(config_to_json(back) == text);
  CHECK(back.block_capacity == 30);
  CHECK(back.field_train.lambda == doctest::Approx(2e-5));
  CHECK(back.completion.select_below == false);
  CHECK(back.completion.n_add == 6);
}

TEST_CASE("config: defaults carry the stated values") {
  PipelineConfig cfg;
  CHECK(cfg.block_capacity == 100);
  CHECK(cfg.field_train.lambda == doctest::Approx(1e-5));
  CHECK(cfg.field_train.s_patch == 8);
  CHECK(cfg.field_train.lr == doctest::Approx(1e-3));
  CHECK(cfg.field_train.lr_end == doctest::Approx(1e-6));
  CHECK(cfg.raster.layers == 4);
  CHECK(cfg.extract.descriptor_dim == 8);
  CHECK(cfg.extract.opacity_min == doctest::Approx(0.5));
  CHECK(cfg.outlier_k == 4);
  CHECK(cfg.outlier_radius == doctest::Approx(3.0 * cfg.voxel));
  CHECK(cfg.completion.n_add == 4);
  CHECK(cfg.completion.select_below == true);
  CHECK(cfg.field.grid.levels == 16);
  CHECK(cfg.field.grid.table_size == (Index(1) << 19));
  CHECK(cfg.field.grid.features == 2);
}

TEST_CASE("pipeline: smoke run, stage composability, resume, determinism") {
  SmokeSetup setup("dgnr_pipe_smoke_ds");

  const fs::path out_a = fs::temp_directory_path() / "dgnr_pipe_a";
  const fs::path out_b = fs::temp_directory_path() / "dgnr_pipe_b";
  const fs::path out_c = fs::temp_directory_path() / "dgnr_pipe_c";
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  fs::remove_all(out_c);

  // full run
  EvalReport report_a;
  {
    Pipeline p(setup.manifest, setup.cfg, out_a);
    report_a = p.run();
  }
  CHECK(report_a.views.size() == 2);  // frames 0 and 10
  CHECK(fs::exists(out_a / "eval.json"));
  CHECK(fs::exists(out_a / "report.txt"));
  CHECK(fs::exists(out_a / "space_final.ply"));
  CHECK(fs::exists(out_a / "renders" / "test_0000.png"));
  CHECK(report_a.field_bytes > 0);
  CHECK(report_a.tau_bytes > 0);

  // aggregates recompute from rows
  EvalReport copy = report_a;
  copy.recompute_aggregates();
  CHECK(copy.psnr_mean == report_a.psnr_mean);
  CHECK(copy.ssim_mean == report_a.ssim_mean);

  // config echo round-trips
  EvalReport parsed = EvalReport::from_json(report_a.to_json());
  CHECK(reports_equal_ex_timing(parsed, report_a));
  PipelineConfig echoed = config_from_json(parsed.config_echo);
  CHECK(echoed.seed == setup.cfg.seed);

  // stage-by-stage run equals run()
  {
    Pipeline p(setup.manifest, setup.cfg, out_b);
    p.stage_partition();
    p.stage_train_field();
    p.stage_extract();
    p.stage_fuse();
    p.stage_clean();
    p.stage_train_renderer();
    p.stage_complete();
    p.stage_finetune();
    p.stage_render();
    EvalReport report_b = p.stage_eval();
    CHECK(reports_equal_ex_timing(report_a, report_b));
  }

  // resume: partial run, then a fresh Pipeline object finishes in place
  {
    Pipeline p(setup.manifest, setup.cfg, out_c);
    p.stage_partition();
    p.stage_train_field();
    p.stage_extract();
  }
  {
    Pipeline p(setup.manifest, setup.cfg, out_c);
    EvalReport report_c = p.run();
    CHECK(reports_equal_ex_timing(report_a, report_c));
  }

  fs::remove_all(out_b);
  fs::remove_all(out_c);

  // eval before training fails with the stage name
  const fs::path out_d = fs::temp_directory_path() / "dgnr_pipe_d";
  fs::remove_all(out_d);
  {
    Pipeline p(setup.manifest, setup.cfg, out_d);
    CHECK_THROWS_AS(p.stage_eval(), StageError);
    try {
      p.stage_render();
    } catch (const StageError& e) {
      CHECK(e.stage == "finetune");
    }
  }
  fs::remove_all(out_d);
  fs::remove_all(out_a);
}

TEST_CASE("pipeline: bench runs on trained artifacts") {
  SmokeSetup setup("dgnr_pipe_smoke_ds");
  const fs::path out = fs::temp_directory_path() / "dgnr_pipe_bench";
  fs::remove_all(out);
  Pipeline p(setup.manifest, setup.cfg, out);
  p.run();
  BenchReport br = p.bench(10);
  CHECK(br.frames == 10);
  CHECK(br.points > 0);
  CHECK(br.fps_mean > 0);
  CHECK(fs::exists(out / "bench.json"));
  fs::remove_all(out);
}
