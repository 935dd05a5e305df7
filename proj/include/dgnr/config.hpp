// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "dgnr/density_space.hpp"
#include "dgnr/field.hpp"
#include "dgnr/perceptual.hpp"
#include "dgnr/raster.hpp"
#include "dgnr/renderer.hpp"
#include "dgnr/train_field.hpp"
#include "dgnr/train_renderer.hpp"

namespace dgnr {

// Everything a pipeline run depends on; serialized verbatim into the run
// report. Defaults: 100-frame blocks, lr 1e-3 decaying to 1e-6, S_patch 8,
// lambda 1e-5.
struct PipelineConfig {
  Index block_capacity = 100;

  FieldConfig field;
  FieldTrainConfig field_train;
  bool bounds_auto = true;  // derive field.grid.bounds from cameras + far

  double voxel = 0.1;
  double outlier_radius = 0.3;  // 3x voxel
  Index outlier_k = 4;
  ExtractConfig extract;
  double merge_margin_factor = 1.5;  // x block camera-AABB diagonal

  RasterConfig raster;
  RendererConfig renderer;
  RendererTrainConfig renderer_train;
  PerceptualConfig perceptual;
  CompletionConfig completion;
  double finetune_fraction = 0.2;
  Index completion_rounds = 1;

  uint64_t seed = 0;
  Index eval_samples_per_ray = 0;  // 0: skip field-only eval in reports

  void validate() const;
};

PipelineConfig config_from_json(const std::string& text);
std::string config_to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace dgnr
