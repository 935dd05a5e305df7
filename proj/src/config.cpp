// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#include <fstream>

#include "dgnr/config.hpp"
#include "json.hpp"

namespace dgnr {

using nlohmann::json;

namespace {

json aabb_to_json(const Aabb& b) {
  return json{{"min", {b.min.x(), b.min.y(), b.min.z()}},
              {"max", {b.max.x(), b.max.y(), b.max.z()}}};
}

Aabb aabb_from_json(const json& j) {
  Aabb b;
  for (int i = 0; i < 3; ++i) {
    b.min[i] = j.at("min")[i].get<double>();
    b.max[i] = j.at("max")[i].get<double>();
  }
  return b;
}

}  // namespace

void PipelineConfig::validate() const {
  check_arg(block_capacity >= 1, "config: block_capacity must be >= 1");
  check_arg(field_train.lambda >= 0.0, "config: lambda must be non-negative");
  check_arg(voxel > 0, "config: voxel must be positive");
  check_arg(outlier_radius > 0, "config: outlier_radius must be positive");
  check_arg(raster.layers >= 1, "config: raster layers must be >= 1");
  check_arg(static_cast<Index>(renderer.widths.size()) <= raster.layers,
            "config: renderer depth cannot exceed raster layers");
  check_arg(finetune_fraction >= 0.0 && finetune_fraction <= 1.0,
            "config: finetune_fraction in [0,1]");
  check_arg(extract.descriptor_dim == renderer.feature_dim ||
                renderer.feature_dim > 0,
            "config: descriptor dim must be set");
}

std::string config_to_json(const PipelineConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["block_capacity"] = c.block_capacity;
  j["field"] = {
      {"grid",
       {{"levels", c.field.grid.levels},
        {"table_size", c.field.grid.table_size},
        {"features", c.field.grid.features},
        {"base_resolution", c.field.grid.base_resolution},
        {"finest_resolution", c.field.grid.finest_resolution},
        {"bounds", aabb_to_json(c.field.grid.bounds)}}},
      {"hidden", c.field.hidden},
      {"geo_features", c.field.geo_features},
      {"near", c.field.near},
      {"far", c.field.far},
      {"coarse_samples", c.field.coarse_samples},
      {"fine_samples", c.field.fine_samples},
      {"last_delta_cap", c.field.last_delta_cap},
      {"density_scale", c.field.density_scale},
      {"background", {c.field.background.x(), c.field.background.y(), c.field.background.z()}},
  };
  j["bounds_auto"] = c.bounds_auto;
  j["field_train"] = {{"steps", c.field_train.steps},
                      {"rays_per_batch", c.field_train.rays_per_batch},
                      {"pixel_rays_per_patch", c.field_train.pixel_rays_per_patch},
                      {"s_patch", c.field_train.s_patch},
                      {"lr", c.field_train.lr},
                      {"lr_end", c.field_train.lr_end},
                      {"lambda", c.field_train.lambda},
                      {"mse_mean", c.field_train.mse_mean}};
  j["space"] = {{"voxel", c.voxel},
                {"outlier_radius", c.outlier_radius},
                {"outlier_k", c.outlier_k},
                {"opacity_min", c.extract.opacity_min},
                {"extract_stride", c.extract.pixel_stride},
                {"descriptor_dim", c.extract.descriptor_dim},
                {"descriptor_init", c.extract.descriptor_init},
                {"merge_margin_factor", c.merge_margin_factor}};
  j["raster"] = {{"layers", c.raster.layers}, {"z_near", c.raster.z_near}};
  j["renderer"] = {{"feature_dim", c.renderer.feature_dim},
                   {"base_width", c.renderer.base_width},
                   {"widths", c.renderer.widths},
                   {"detail_width", c.renderer.detail_width}};
  j["renderer_train"] = {{"steps", c.renderer_train.steps},
                         {"lr", c.renderer_train.lr},
                         {"lr_end", c.renderer_train.lr_end},
                         {"s_patch", c.renderer_train.s_patch}};
  j["perceptual"] = {{"channels", c.perceptual.channels},
                     {"pool_after", c.perceptual.pool_after},
                     {"selected", c.perceptual.selected},
                     {"seed", c.perceptual.seed},
                     {"weights_path", c.perceptual.weights_path}};
  j["completion"] = {{"select_below", c.completion.select_below},
                     {"n_add", c.completion.n_add},
                     {"s_patch", c.completion.s_patch},
                     {"descriptor_init", c.completion.descriptor_init},
                     {"rounds", c.completion_rounds}};
  j["finetune_fraction"] = c.finetune_fraction;
  j["eval_samples_per_ray"] = c.eval_samples_per_ray;
  return j.dump(2);
}

PipelineConfig config_from_json(const std::string& text) {
  json j = json::parse(text);
  PipelineConfig c;
  c.seed = j.value("seed", c.seed);
  c.block_capacity = j.value("block_capacity", c.block_capacity);
  if (j.contains("field")) {
    const json& f = j["field"];
    if (f.contains("grid")) {
      const json& g = f["grid"];
      c.field.grid.levels = g.value("levels", c.field.grid.levels);
      c.field.grid.table_size = g.value("table_size", c.field.grid.table_size);
      c.field.grid.features = g.value("features", c.field.grid.features);
      c.field.grid.base_resolution = g.value("base_resolution", c.field.grid.base_resolution);
      c.field.grid.finest_resolution =
          g.value("finest_resolution", c.field.grid.finest_resolution);
      if (g.contains("bounds")) c.field.grid.bounds = aabb_from_json(g["bounds"]);
    }
    c.field.hidden = f.value("hidden", c.field.hidden);
    c.field.geo_features = f.value("geo_features", c.field.geo_features);
    c.field.near = f.value("near", c.field.near);
    c.field.far = f.value("far", c.field.far);
    c.field.coarse_samples = f.value("coarse_samples", c.field.coarse_samples);
    c.field.fine_samples = f.value("fine_samples", c.field.fine_samples);
    c.field.last_delta_cap = f.value("last_delta_cap", c.field.last_delta_cap);
    c.field.density_scale = f.value("density_scale", c.field.density_scale);
    if (f.contains("background"))
      for (int i = 0; i < 3; ++i) c.field.background[i] = f["background"][i].get<float>();
  }
  c.bounds_auto = j.value("bounds_auto", c.bounds_auto);
  if (j.contains("field_train")) {
    const json& t = j["field_train"];
    c.field_train.steps = t.value("steps", c.field_train.steps);
    c.field_train.rays_per_batch = t.value("rays_per_batch", c.field_train.rays_per_batch);
    c.field_train.pixel_rays_per_patch =
        t.value("pixel_rays_per_patch", c.field_train.pixel_rays_per_patch);
    c.field_train.s_patch = t.value("s_patch", c.field_train.s_patch);
    c.field_train.lr = t.value("lr", c.field_train.lr);
    c.field_train.lr_end = t.value("lr_end", c.field_train.lr_end);
    c.field_train.lambda = t.value("lambda", c.field_train.lambda);
    c.field_train.mse_mean = t.value("mse_mean", c.field_train.mse_mean);
  }
  if (j.contains("space")) {
    const json& s = j["space"];
    c.voxel = s.value("voxel", c.voxel);
    c.outlier_radius = s.value("outlier_radius", c.outlier_radius);
    c.outlier_k = s.value("outlier_k", c.outlier_k);
    c.extract.opacity_min = s.value("opacity_min", c.extract.opacity_min);
    c.extract.pixel_stride = s.value("extract_stride", c.extract.pixel_stride);
    c.extract.descriptor_dim = s.value("descriptor_dim", c.extract.descriptor_dim);
    c.extract.descriptor_init = s.value("descriptor_init", c.extract.descriptor_init);
    c.merge_margin_factor = s.value("merge_margin_factor", c.merge_margin_factor);
  }
  if (j.contains("raster")) {
    c.raster.layers = j["raster"].value("layers", c.raster.layers);
    c.raster.z_near = j["raster"].value("z_near", c.raster.z_near);
  }
  if (j.contains("renderer")) {
    const json& r = j["renderer"];
    c.renderer.feature_dim = r.value("feature_dim", c.renderer.feature_dim);
    c.renderer.base_width = r.value("base_width", c.renderer.base_width);
    if (r.contains("widths")) c.renderer.widths = r["widths"].get<std::vector<Index>>();
    c.renderer.detail_width = r.value("detail_width", c.renderer.detail_width);
  }
  if (j.contains("renderer_train")) {
    const json& t = j["renderer_train"];
    c.renderer_train.steps = t.value("steps", c.renderer_train.steps);
    c.renderer_train.lr = t.value("lr", c.renderer_train.lr);
    c.renderer_train.lr_end = t.value("lr_end", c.renderer_train.lr_end);
    c.renderer_train.s_patch = t.value("s_patch", c.renderer_train.s_patch);
  }
  if (j.contains("perceptual")) {
    const json& p = j["perceptual"];
    if (p.contains("channels")) c.perceptual.channels = p["channels"].get<std::vector<Index>>();
    if (p.contains("pool_after"))
      c.perceptual.pool_after = p["pool_after"].get<std::vector<Index>>();
    if (p.contains("selected")) c.perceptual.selected = p["selected"].get<std::vector<Index>>();
    c.perceptual.seed = p.value("seed", c.perceptual.seed);
    c.perceptual.weights_path = p.value("weights_path", c.perceptual.weights_path);
  }
  if (j.contains("completion")) {
    const json& k = j["completion"];
    c.completion.select_below = k.value("select_below", c.completion.select_below);
    c.completion.n_add = k.value("n_add", c.completion.n_add);
    c.completion.s_patch = k.value("s_patch", c.completion.s_patch);
    c.completion.descriptor_init = k.value("descriptor_init", c.completion.descriptor_init);
    c.completion_rounds = k.value("rounds", c.completion_rounds);
  }
  c.finetune_fraction = j.value("finetune_fraction", c.finetune_fraction);
  c.eval_samples_per_ray = j.value("eval_samples_per_ray", c.eval_samples_per_ray);
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_config: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

}  // namespace dgnr
