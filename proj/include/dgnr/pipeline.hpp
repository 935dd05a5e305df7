// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Stage orchestration: partition -> per-block field training -> extraction ->
// sequential fusion -> outlier cleanup -> renderer training -> completion ->
// fine-tune -> test-view rendering -> evaluation. Every stage persists its
// artifacts and a done-marker, so a rerun resumes where it stopped.
#pragma once

#include <map>
#include <optional>

#include "dgnr/config.hpp"
#include "dgnr/dataset.hpp"
#include "dgnr/metrics.hpp"

namespace dgnr {

struct ViewEval {
  Index frame = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double perceptual = 0.0;
};

struct EvalReport {
  std::vector<ViewEval> views;
  double psnr_mean = 0.0;
  double ssim_mean = 0.0;
  double perceptual_mean = 0.0;
  // timing (excluded from determinism comparisons)
  double rasterize_ms_mean = 0.0;
  double renderer_ms_mean = 0.0;
  double fps_mean = 0.0;
  double fps_median = 0.0;
  // model sizes in bytes
  uint64_t field_bytes = 0;
  uint64_t space_bytes = 0;
  uint64_t net_bytes = 0;
  uint64_t tau_bytes = 0;
  std::string config_echo;  // JSON of the config that produced the report

  void recompute_aggregates();
  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
  // Human-readable table.
  std::string to_table() const;
};

struct BenchReport {
  Index frames = 0;
  Index points = 0;
  double rasterize_ms_mean = 0.0;
  double encode_ms_mean = 0.0;
  double net_ms_mean = 0.0;
  double fps_mean = 0.0;
  double fps_median = 0.0;
  std::string to_json() const;
};

// A failure inside run_pipeline carries the stage that broke.
struct StageError : std::runtime_error {
  std::string stage;
  StageError(std::string stage_name, const std::string& what)
      : std::runtime_error("stage '" + stage_name + "' failed: " + what),
        stage(std::move(stage_name)) {}
};

class Pipeline {
 public:
  Pipeline(std::filesystem::path manifest, PipelineConfig cfg, std::filesystem::path out_dir,
           std::ostream* log = nullptr);

  // Individual stages (each resumable; no-ops when already done).
  void stage_partition();
  void stage_train_field();     // all blocks
  void stage_train_field(Index block);
  void stage_extract();
  void stage_extract(Index block);
  void stage_fuse();
  void stage_clean();
  void stage_train_renderer();
  void stage_complete();
  void stage_finetune();
  void stage_render();
  EvalReport stage_eval();

  // Full pipeline; returns the final report.
  EvalReport run();

  BenchReport bench(Index frames);

  const Dataset& dataset() const { return dataset_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const PipelineConfig& config() const { return cfg_; }
  std::filesystem::path out_dir() const { return out_; }

  // Frames of a block that are training views.
  std::vector<Index> block_train_frames(const Block& b) const;
  std::vector<Index> train_frames() const { return dataset_.train_indices(); }
  std::vector<Index> test_frames() const { return dataset_.test_indices(); }

 private:
  bool done(const std::string& stage) const;
  void mark_done(const std::string& stage);
  void require(const std::string& stage) const;
  void load_blocks();
  FieldConfig block_field_config() const;

  std::filesystem::path manifest_;
  PipelineConfig cfg_;
  std::filesystem::path out_;
  std::ostream* log_;
  Dataset dataset_;
  std::vector<Block> blocks_;
};

}  // namespace dgnr
