// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: synthetic dataset generation, the staged pipeline,
// evaluation, and benchmarking.
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "dgnr/pipeline.hpp"
#include "dgnr/scene.hpp"

using namespace dgnr;

namespace {

struct CommonArgs {
  std::string manifest;
  std::string config_path;
  std::string out = "out";
  std::optional<uint64_t> seed;
};

PipelineConfig resolve_config(const CommonArgs& args) {
  PipelineConfig cfg;
  if (!args.config_path.empty()) cfg = load_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  return cfg;
}

Pipeline make_pipeline(const CommonArgs& args) {
  return Pipeline(args.manifest, resolve_config(args), args.out, &std::cout);
}

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_manifest = true) {
  if (needs_manifest)
    cmd->add_option("--manifest", args.manifest, "dataset manifest file")->required();
  cmd->add_option("--config", args.config_path, "pipeline config JSON");
  cmd->add_option("--out", args.out, "output/working directory");
  cmd->add_option("--seed", args.seed, "override the config seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"density-guided neural point rendering pipeline"};
  app.require_subcommand(1);

  CommonArgs args;

  // synth: generate a synthetic dataset from a scene spec
  auto* synth = app.add_subcommand("synth", "render a synthetic dataset from a scene spec");
  std::string scene_arg = "corridor";
  Index synth_frames = 0;
  Index synth_spp = 512;
  std::string synth_format = "ppm";
  std::string synth_out = "dataset";
  std::optional<uint64_t> synth_seed;
  synth->add_option("--scene", scene_arg, "scene JSON path, or 'corridor' / 'basic'");
  synth->add_option("--frames", synth_frames, "frame count (0: use the scene's trajectory)");
  synth->add_option("--spp", synth_spp, "quadrature samples per ray");
  synth->add_option("--format", synth_format, "image format: ppm or png");
  synth->add_option("--out", synth_out, "dataset output directory");
  synth->add_option("--seed", synth_seed, "scene/trajectory seed");

  auto* partition = app.add_subcommand("partition", "split the trajectory into blocks");
  auto* train_field_cmd = app.add_subcommand("train-field", "train per-block radiance fields");
  auto* extract = app.add_subcommand("extract", "extract density points per block");
  auto* fuse = app.add_subcommand("fuse", "sequentially merge block spaces");
  auto* clean = app.add_subcommand("clean", "remove outlier points");
  auto* train_renderer_cmd =
      app.add_subcommand("train-renderer", "train the neural renderer and descriptors");
  auto* complete = app.add_subcommand("complete", "densify the space from patch scores");
  auto* render = app.add_subcommand("render", "render the held-out test views");
  auto* eval = app.add_subcommand("eval", "evaluate test views and write the report");
  auto* bench = app.add_subcommand("bench", "time rasterization and rendering");
  auto* run = app.add_subcommand("run", "execute the full pipeline");

  std::optional<Index> block_arg;
  for (CLI::App* cmd : {partition, train_field_cmd, extract, fuse, clean, train_renderer_cmd,
                        complete, render, eval, bench, run})
    add_common(cmd, args);
  train_field_cmd->add_option("--block", block_arg, "train a single block");
  extract->add_option("--block", block_arg, "extract a single block");
  Index bench_frames = 50;
  bench->add_option("--frames", bench_frames, "frames to time (>= 50 recommended)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      SyntheticScene scene;
      if (scene_arg == "corridor")
        scene = make_corridor_scene(synth_seed.value_or(0));
      else if (scene_arg == "basic")
        scene = make_scene(synth_seed.value_or(0));
      else
        scene = load_scene(scene_arg);
      const Index frames = synth_frames > 0 ? synth_frames : scene.trajectory.frames;
      Trajectory traj = make_trajectory(scene, frames, synth_seed.value_or(0));
      auto manifest = export_dataset(scene, traj, synth_out, synth_spp, synth_format);
      save_scene(std::filesystem::path(synth_out) / "scene.json", scene);
      std::cout << "wrote " << manifest.string() << " (" << frames << " frames)\n";
      return 0;
    }

    Pipeline pipeline = make_pipeline(args);
    if (partition->parsed()) {
      pipeline.stage_partition();
    } else if (train_field_cmd->parsed()) {
      if (block_arg)
        pipeline.stage_train_field(*block_arg);
      else
        pipeline.stage_train_field();
    } else if (extract->parsed()) {
      if (block_arg)
        pipeline.stage_extract(*block_arg);
      else
        pipeline.stage_extract();
    } else if (fuse->parsed()) {
      pipeline.stage_fuse();
    } else if (clean->parsed()) {
      pipeline.stage_clean();
    } else if (train_renderer_cmd->parsed()) {
      pipeline.stage_train_renderer();
    } else if (complete->parsed()) {
      pipeline.stage_complete();
    } else if (render->parsed()) {
      pipeline.stage_render();
    } else if (eval->parsed()) {
      EvalReport report = pipeline.stage_eval();
      std::cout << report.to_table();
    } else if (bench->parsed()) {
      BenchReport report = pipeline.bench(bench_frames);
      std::cout << report.to_json() << "\n";
    } else if (run->parsed()) {
      EvalReport report = pipeline.run();
      std::cout << report.to_table();
    }
    return 0;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << " [stage=" << e.stage << "]\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
