// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#include "dgnr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace dgnr {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string block_tag(Index i) {
  std::ostringstream os;
  os << "block_" << std::setw(2) << std::setfill('0') << i;
  return os.str();
}

uint64_t file_bytes(const std::filesystem::path& p) {
  std::error_code ec;
  auto n = std::filesystem::file_size(p, ec);
  return ec ? 0 : static_cast<uint64_t>(n);
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

void write_curve_csv(const std::filesystem::path& p, const std::vector<double>& total,
                     const std::vector<double>& mse, const std::vector<double>& depth) {
  std::ofstream os(p, std::ios::trunc);
  os << "step,total,mse,depth\n";
  for (size_t i = 0; i < total.size(); ++i)
    os << i << "," << total[i] << "," << (i < mse.size() ? mse[i] : 0.0) << ","
       << (i < depth.size() ? depth[i] : 0.0) << "\n";
}

void write_patch_scores_csv(const std::filesystem::path& p, const std::vector<Index>& frames,
                            const PatchScores& scores) {
  std::ofstream os(p, std::ios::trunc);
  os << "view,patch_row,patch_col,score\n";
  for (size_t v = 0; v < scores.scores.size(); ++v)
    for (Index r = 0; r < scores.patch_rows; ++r)
      for (Index c = 0; c < scores.patch_cols; ++c)
        os << frames[v] << "," << r << "," << c << ","
           << scores.scores[v][r * scores.patch_cols + c] << "\n";
}

PatchScores read_patch_scores_csv(const std::filesystem::path& p,
                                  const std::vector<Index>& frames) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  std::string line;
  std::getline(is, line);  // header
  PatchScores out;
  std::map<Index, std::map<std::pair<Index, Index>, float>> by_view;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::getline(ls, tok, ',');
    const Index view = std::stoll(tok);
    std::getline(ls, tok, ',');
    const Index r = std::stoll(tok);
    std::getline(ls, tok, ',');
    const Index c = std::stoll(tok);
    std::getline(ls, tok, ',');
    const float s = std::stof(tok);
    by_view[view][{r, c}] = s;
    out.patch_rows = std::max(out.patch_rows, r + 1);
    out.patch_cols = std::max(out.patch_cols, c + 1);
  }
  for (Index f : frames) {
    auto it = by_view.find(f);
    if (it == by_view.end())
      throw std::runtime_error("patch scores missing view " + std::to_string(f));
    std::vector<float> grid(static_cast<size_t>(out.patch_rows * out.patch_cols), 0.f);
    for (const auto& [rc, s] : it->second)
      grid[static_cast<size_t>(rc.first * out.patch_cols + rc.second)] = s;
    out.scores.push_back(std::move(grid));
  }
  return out;
}

}  // namespace

void EvalReport::recompute_aggregates() {
  psnr_mean = ssim_mean = perceptual_mean = 0.0;
  for (const auto& v : views) {
    psnr_mean += v.psnr;
    ssim_mean += v.ssim;
    perceptual_mean += v.perceptual;
  }
  if (!views.empty()) {
    psnr_mean /= static_cast<double>(views.size());
    ssim_mean /= static_cast<double>(views.size());
    perceptual_mean /= static_cast<double>(views.size());
  }
}

std::string EvalReport::to_json() const {
  json j;
  json rows = json::array();
  for (const auto& v : views)
    rows.push_back({{"frame", v.frame},
                    {"psnr", v.psnr},
                    {"ssim", v.ssim},
                    {"perceptual", v.perceptual}});
  j["views"] = rows;
  j["psnr_mean"] = psnr_mean;
  j["ssim_mean"] = ssim_mean;
  j["perceptual_mean"] = perceptual_mean;
  j["timing"] = {{"rasterize_ms_mean", rasterize_ms_mean},
                 {"renderer_ms_mean", renderer_ms_mean},
                 {"fps_mean", fps_mean},
                 {"fps_median", fps_median}};
  j["model_bytes"] = {{"field", field_bytes},
                      {"space", space_bytes},
                      {"net", net_bytes},
                      {"tau", tau_bytes}};
  j["config"] = json::parse(config_echo.empty() ? "{}" : config_echo);
  return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
  json j = json::parse(text);
  EvalReport r;
  for (const auto& row : j.at("views")) {
    ViewEval v;
    v.frame = row.at("frame").get<Index>();
    v.psnr = row.at("psnr").get<double>();
    v.ssim = row.at("ssim").get<double>();
    v.perceptual = row.at("perceptual").get<double>();
    r.views.push_back(v);
  }
  r.psnr_mean = j.at("psnr_mean").get<double>();
  r.ssim_mean = j.at("ssim_mean").get<double>();
  r.perceptual_mean = j.at("perceptual_mean").get<double>();
  const json& t = j.at("timing");
  r.rasterize_ms_mean = t.at("rasterize_ms_mean").get<double>();
  r.renderer_ms_mean = t.at("renderer_ms_mean").get<double>();
  r.fps_mean = t.at("fps_mean").get<double>();
  r.fps_median = t.at("fps_median").get<double>();
  const json& m = j.at("model_bytes");
  r.field_bytes = m.at("field").get<uint64_t>();
  r.space_bytes = m.at("space").get<uint64_t>();
  r.net_bytes = m.at("net").get<uint64_t>();
  r.tau_bytes = m.at("tau").get<uint64_t>();
  r.config_echo = j.at("config").dump(2);
  return r;
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << "frame    psnr_db    ssim     perceptual\n";
  for (const auto& v : views)
    os << std::setw(5) << v.frame << std::setw(11) << v.psnr << std::setw(9) << v.ssim
       << std::setw(13) << v.perceptual << "\n";
  os << "mean " << std::setw(11) << psnr_mean << std::setw(9) << ssim_mean << std::setw(13)
     << perceptual_mean << "\n";
  os << "timing: rasterize " << rasterize_ms_mean << " ms, renderer " << renderer_ms_mean
     << " ms, fps mean " << fps_mean << " median " << fps_median << "\n";
  os << "bytes: field " << field_bytes << ", space " << space_bytes << ", net " << net_bytes
     << ", tau " << tau_bytes << "\n";
  return os.str();
}

std::string BenchReport::to_json() const {
  json j;
  j["frames"] = frames;
  j["points"] = points;
  j["rasterize_ms_mean"] = rasterize_ms_mean;
  j["encode_ms_mean"] = encode_ms_mean;
  j["net_ms_mean"] = net_ms_mean;
  j["fps_mean"] = fps_mean;
  j["fps_median"] = fps_median;
  return j.dump(2);
}

Pipeline::Pipeline(std::filesystem::path manifest, PipelineConfig cfg,
                   std::filesystem::path out_dir, std::ostream* log)
    : manifest_(std::move(manifest)), cfg_(std::move(cfg)), out_(std::move(out_dir)), log_(log) {
  cfg_.validate();
  dataset_ = load_dataset(manifest_);
  std::filesystem::create_directories(out_);
  std::filesystem::create_directories(out_ / "stages");
  if (cfg_.bounds_auto) {
    // Scene box from camera positions inflated by the far plane.
    Aabb box;
    box.min = box.max = dataset_.frames[0].camera.center();
    for (const auto& f : dataset_.frames) {
      box.min = box.min.cwiseMin(f.camera.center());
      box.max = box.max.cwiseMax(f.camera.center());
    }
    const double far = cfg_.field.far;
    box.min -= Vec3(0.45 * far, 0.45 * far, 0.15 * far);
    box.max += Vec3(0.45 * far, 0.45 * far, 1.05 * far);
    cfg_.field.grid.bounds = box;
  }
  write_text(out_ / "config.json", config_to_json(cfg_));
}

bool Pipeline::done(const std::string& stage) const {
  return std::filesystem::exists(out_ / "stages" / (stage + ".done"));
}

void Pipeline::mark_done(const std::string& stage) {
  write_text(out_ / "stages" / (stage + ".done"), "done\n");
}

void Pipeline::require(const std::string& stage) const {
  if (!done(stage))
    throw StageError(stage, "required stage has not completed (artifacts missing)");
}

std::vector<Index> Pipeline::block_train_frames(const Block& b) const {
  std::vector<Index> out;
  for (Index i = b.begin; i < b.end; ++i)
    if (!dataset_.is_test_frame(i)) out.push_back(i);
  return out;
}

FieldConfig Pipeline::block_field_config() const { return cfg_.field; }

void Pipeline::load_blocks() {
  if (!blocks_.empty()) return;
  std::ifstream is(out_ / "blocks.json");
  if (!is) throw StageError("partition", "blocks.json missing");
  json j = json::parse(is);
  for (const auto& bj : j.at("blocks")) {
    Block b;
    b.begin = bj.at("begin").get<Index>();
    b.end = bj.at("end").get<Index>();
    for (int i = 0; i < 3; ++i) {
      b.cam_box.min[i] = bj.at("cam_min")[i].get<double>();
      b.cam_box.max[i] = bj.at("cam_max")[i].get<double>();
    }
    blocks_.push_back(b);
  }
}

void Pipeline::stage_partition() {
  if (done("partition")) {
    load_blocks();
    return;
  }
  try {
    std::vector<Vec3> centers;
    for (const auto& f : dataset_.frames) centers.push_back(f.camera.center());
    blocks_ = partition_scene(centers, cfg_.block_capacity);
    json j;
    json arr = json::array();
    for (const auto& b : blocks_)
      arr.push_back({{"begin", b.begin},
                     {"end", b.end},
                     {"cam_min", {b.cam_box.min.x(), b.cam_box.min.y(), b.cam_box.min.z()}},
                     {"cam_max", {b.cam_box.max.x(), b.cam_box.max.y(), b.cam_box.max.z()}}});
    j["blocks"] = arr;
    write_text(out_ / "blocks.json", j.dump(2));
    mark_done("partition");
    if (log_) (*log_) << "partition: " << blocks_.size() << " block(s)\n";
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("partition", e.what());
  }
}

void Pipeline::stage_train_field() {
  stage_partition();
  for (Index i = 0; i < static_cast<Index>(blocks_.size()); ++i) stage_train_field(i);
}

void Pipeline::stage_train_field(Index block) {
  stage_partition();
  const std::string stage = "train_field_" + block_tag(block);
  if (done(stage)) return;
  try {
    const Block& b = blocks_.at(static_cast<size_t>(block));
    RadianceField<float> field(block_field_config(),
                               derive_seed(cfg_.seed, "field_init", static_cast<uint64_t>(block)));
    auto result =
        train_field(field, dataset_, block_train_frames(b), cfg_.field_train,
                    derive_seed(cfg_.seed, "field_train", static_cast<uint64_t>(block)), log_);
    ParamSet<float> ps = field.params();
    save_params(out_ / ("field_" + block_tag(block) + ".ckpt"), ps);
    write_curve_csv(out_ / ("field_" + block_tag(block) + "_loss.csv"), result.total_curve,
                    result.mse_curve, result.depth_curve);
    mark_done(stage);
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void Pipeline::stage_extract() {
  stage_partition();
  for (Index i = 0; i < static_cast<Index>(blocks_.size()); ++i) stage_extract(i);
}

void Pipeline::stage_extract(Index block) {
  stage_partition();
  const std::string stage = "extract_" + block_tag(block);
  if (done(stage)) return;
  require("train_field_" + block_tag(block));
  try {
    const Block& b = blocks_.at(static_cast<size_t>(block));
    RadianceField<float> field(block_field_config(),
                               derive_seed(cfg_.seed, "field_init", static_cast<uint64_t>(block)));
    ParamSet<float> ps = field.params();
    load_params(out_ / ("field_" + block_tag(block) + ".ckpt"), ps);
    std::vector<CameraModel> views;
    for (Index f : block_train_frames(b)) views.push_back(dataset_.frames[f].camera);
    ExtractConfig ecfg = cfg_.extract;
    ecfg.descriptor_dim = cfg_.renderer.feature_dim == 0 ? ecfg.descriptor_dim
                                                         : ecfg.descriptor_dim;
    DensitySpace space =
        extract_points(field, views, ecfg, static_cast<int32_t>(block),
                       derive_seed(cfg_.seed, "extract", static_cast<uint64_t>(block)), log_);
    save_space(out_ / ("space_" + block_tag(block) + ".ply"), space);
    if (log_) (*log_) << "extract " << block_tag(block) << ": " << space.size() << " points\n";
    mark_done(stage);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void Pipeline::stage_fuse() {
  stage_partition();
  if (done("fuse")) return;
  for (Index i = 0; i < static_cast<Index>(blocks_.size()); ++i)
    require("extract_" + block_tag(i));
  try {
    DensitySpace merged = make_space({}, Tensor<float>(Shape{0, cfg_.extract.descriptor_dim}));
    for (Index i = 0; i < static_cast<Index>(blocks_.size()); ++i) {
      DensitySpace block_space = load_space(out_ / ("space_" + block_tag(i) + ".ply"));
      const Block& b = blocks_.at(static_cast<size_t>(i));
      const double margin = cfg_.merge_margin_factor * b.cam_box.diagonal();
      merged = merge_blocks(merged, block_space, b.cam_box.inflated(margin), cfg_.voxel);
      if (log_)
        (*log_) << "fuse " << block_tag(i) << ": merged size " << merged.size() << "\n";
    }
    save_space(out_ / "space_fused.ply", merged);
    mark_done("fuse");
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("fuse", e.what());
  }
}

void Pipeline::stage_clean() {
  if (done("clean")) return;
  require("fuse");
  try {
    DensitySpace fused = load_space(out_ / "space_fused.ply");
    DensitySpace clean = remove_outliers(fused, cfg_.outlier_radius, cfg_.outlier_k);
    save_space(out_ / "space_clean.ply", clean);
    if (log_)
      (*log_) << "clean: " << fused.size() << " -> " << clean.size() << " points\n";
    mark_done("clean");
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("clean", e.what());
  }
}

void Pipeline::stage_train_renderer() {
  if (done("train_renderer")) return;
  require("clean");
  try {
    DensitySpace space = load_space(out_ / "space_clean.ply");
    RendererNet<float> net(cfg_.renderer, derive_seed(cfg_.seed, "net_init"));
    FeatureEncoder<float> encoder(cfg_.raster.layers, cfg_.extract.descriptor_dim,
                                  cfg_.renderer.feature_dim, derive_seed(cfg_.seed, "enc_init"));
    PerceptualExtractor<float> extractor(cfg_.perceptual);
    auto result =
        train_renderer(space, dataset_, train_frames(), net, encoder, extractor, cfg_.raster,
                       cfg_.renderer_train, derive_seed(cfg_.seed, "renderer_train"), log_);
    ParamSet<float> ps = net.params();
    encoder.collect(ps);
    save_params(out_ / "renderer.ckpt", ps);
    save_space(out_ / "space_trained.ply", space);
    write_patch_scores_csv(out_ / "patch_scores.csv", train_frames(), result.patch_scores);
    std::vector<double> empty;
    write_curve_csv(out_ / "renderer_loss.csv", result.loss_curve, empty, empty);
    mark_done("train_renderer");
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("train_renderer", e.what());
  }
}

void Pipeline::stage_complete() {
  if (done("complete")) return;
  require("train_renderer");
  try {
    DensitySpace space = load_space(out_ / "space_trained.ply");
    PatchScores scores = read_patch_scores_csv(out_ / "patch_scores.csv", train_frames());
    std::vector<CameraModel> views;
    std::vector<DepthImage> depth0;
    const std::vector<Vec3> positions = space.positions_as<double>();
    for (Index f : train_frames()) {
      const CameraModel& cam = dataset_.frames[f].camera;
      views.push_back(cam);
      FeaturePyramid pyr = rasterize(positions, cam, cfg_.raster);
      depth0.push_back(pyr.layers[0].depth_image());
    }
    CompletionConfig ccfg = cfg_.completion;
    auto stats = complete_points(space, views, depth0, scores, ccfg, cfg_.field.near,
                                 cfg_.field.far, derive_seed(cfg_.seed, "complete"));
    if (log_)
      (*log_) << "complete: selected " << stats.patches_selected << ", skipped "
              << stats.patches_skipped << ", added " << stats.points_added << " points\n";
    space = voxel_dedupe(space, cfg_.voxel);
    save_space(out_ / "space_completed.ply", space);
    mark_done("complete");
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("complete", e.what());
  }
}

void Pipeline::stage_finetune() {
  if (done("finetune")) return;
  require("complete");
  try {
    DensitySpace space = load_space(out_ / "space_completed.ply");
    RendererNet<float> net(cfg_.renderer, derive_seed(cfg_.seed, "net_init"));
    FeatureEncoder<float> encoder(cfg_.raster.layers, cfg_.extract.descriptor_dim,
                                  cfg_.renderer.feature_dim, derive_seed(cfg_.seed, "enc_init"));
    ParamSet<float> ps = net.params();
    encoder.collect(ps);
    load_params(out_ / "renderer.ckpt", ps);
    PerceptualExtractor<float> extractor(cfg_.perceptual);
    RendererTrainConfig ft = cfg_.renderer_train;
    ft.steps = static_cast<Index>(std::llround(cfg_.finetune_fraction *
                                               static_cast<double>(cfg_.renderer_train.steps)));
    auto result = train_renderer(space, dataset_, train_frames(), net, encoder, extractor,
                                 cfg_.raster, ft, derive_seed(cfg_.seed, "finetune"), log_);
    ParamSet<float> out_ps = net.params();
    encoder.collect(out_ps);
    save_params(out_ / "renderer_final.ckpt", out_ps);
    save_space(out_ / "space_final.ply", space);
    write_patch_scores_csv(out_ / "patch_scores.csv", train_frames(), result.patch_scores);
    mark_done("finetune");
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("finetune", e.what());
  }
}

void Pipeline::stage_render() {
  if (done("render")) return;
  require("finetune");
  try {
    DensitySpace space = load_space(out_ / "space_final.ply");
    RendererNet<float> net(cfg_.renderer, derive_seed(cfg_.seed, "net_init"));
    FeatureEncoder<float> encoder(cfg_.raster.layers, cfg_.extract.descriptor_dim,
                                  cfg_.renderer.feature_dim, derive_seed(cfg_.seed, "enc_init"));
    ParamSet<float> ps = net.params();
    encoder.collect(ps);
    load_params(out_ / "renderer_final.ckpt", ps);
    std::filesystem::create_directories(out_ / "renders");
    char name[64];
    for (Index f : test_frames()) {
      Image img = render_view(space, dataset_.frames[f].camera, net, encoder, cfg_.raster);
      std::snprintf(name, sizeof(name), "test_%04lld.png", static_cast<long long>(f));
      write_image(out_ / "renders" / name, img);
    }
    mark_done("render");
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("render", e.what());
  }
}

EvalReport Pipeline::stage_eval() {
  require("finetune");
  try {
    DensitySpace space = load_space(out_ / "space_final.ply");
    RendererNet<float> net(cfg_.renderer, derive_seed(cfg_.seed, "net_init"));
    FeatureEncoder<float> encoder(cfg_.raster.layers, cfg_.extract.descriptor_dim,
                                  cfg_.renderer.feature_dim, derive_seed(cfg_.seed, "enc_init"));
    ParamSet<float> ps = net.params();
    encoder.collect(ps);
    load_params(out_ / "renderer_final.ckpt", ps);
    PerceptualExtractor<float> extractor(cfg_.perceptual);
    const std::vector<Vec3> positions = space.positions_as<double>();

    EvalReport report;
    std::vector<double> frame_ms;
    for (Index f : test_frames()) {
      const CameraModel& cam = dataset_.frames[f].camera;
      auto t0 = Clock::now();
      FeaturePyramid pyr = rasterize(positions, cam, cfg_.raster);
      const double raster_ms = ms_since(t0);
      auto t1 = Clock::now();
      Tape<float> tape;
      Var<float> tau = tape.constant(space.descriptors);
      Var<float> rgb = render_view_vars(tape, pyr, tau, encoder, net);
      const double net_ms = ms_since(t1);
      Image img = tensor_to_image(rgb.val());
      ViewEval ve;
      ve.frame = f;
      ve.psnr = psnr(img, dataset_.frames[f].image);
      ve.ssim = ssim(img, dataset_.frames[f].image);
      Tape<float> ptape;
      ve.perceptual = perceptual_loss(ptape, ptape.constant(img.chw),
                                      dataset_.frames[f].image.chw, extractor)
                          .val()
                          .value();
      report.views.push_back(ve);
      report.rasterize_ms_mean += raster_ms;
      report.renderer_ms_mean += net_ms;
      frame_ms.push_back(raster_ms + net_ms);
    }
    const auto n = static_cast<double>(report.views.size());
    report.rasterize_ms_mean /= n;
    report.renderer_ms_mean /= n;
    std::vector<double> fps;
    for (double ms : frame_ms) fps.push_back(1000.0 / ms);
    for (double f : fps) report.fps_mean += f;
    report.fps_mean /= n;
    std::sort(fps.begin(), fps.end());
    report.fps_median = fps[fps.size() / 2];
    report.recompute_aggregates();

    for (Index i = 0; i < static_cast<Index>(blocks_.size()); ++i)
      report.field_bytes += file_bytes(out_ / ("field_" + block_tag(i) + ".ckpt"));
    report.space_bytes = file_bytes(out_ / "space_final.ply");
    report.net_bytes = file_bytes(out_ / "renderer_final.ckpt");
    report.tau_bytes =
        static_cast<uint64_t>(space.descriptors.size()) * sizeof(float);
    report.config_echo = config_to_json(cfg_);

    write_text(out_ / "eval.json", report.to_json());
    write_text(out_ / "report.txt", report.to_table());
    if (log_) (*log_) << report.to_table();
    return report;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("eval", e.what());
  }
}

EvalReport Pipeline::run() {
  stage_partition();
  stage_train_field();
  stage_extract();
  stage_fuse();
  stage_clean();
  stage_train_renderer();
  stage_complete();
  stage_finetune();
  stage_render();
  return stage_eval();
}

BenchReport Pipeline::bench(Index frames) {
  require("finetune");
  DensitySpace space = load_space(out_ / "space_final.ply");
  RendererNet<float> net(cfg_.renderer, derive_seed(cfg_.seed, "net_init"));
  FeatureEncoder<float> encoder(cfg_.raster.layers, cfg_.extract.descriptor_dim,
                                cfg_.renderer.feature_dim, derive_seed(cfg_.seed, "enc_init"));
  ParamSet<float> ps = net.params();
  encoder.collect(ps);
  load_params(out_ / "renderer_final.ckpt", ps);

  BenchReport report;
  report.frames = frames;
  report.points = space.size();
  const std::vector<Vec3> positions = space.positions_as<double>();
  std::vector<double> frame_ms;
  for (Index i = 0; i < frames; ++i) {
    const CameraModel& cam =
        dataset_.frames[static_cast<size_t>(i % static_cast<Index>(dataset_.frames.size()))]
            .camera;
    auto t0 = Clock::now();
    FeaturePyramid pyr = rasterize(positions, cam, cfg_.raster);
    const double raster_ms = ms_since(t0);
    auto t1 = Clock::now();
    Tape<float> tape;
    Var<float> tau = tape.constant(space.descriptors);
    std::vector<Var<float>> ndf;
    for (Index s = 0; s < static_cast<Index>(net.cfg.widths.size()); ++s)
      ndf.push_back(encode_features(tape, pyr.layers[static_cast<size_t>(s)], tau,
                                    tape.param(encoder.weights[static_cast<size_t>(s)]),
                                    tape.param(encoder.biases[static_cast<size_t>(s)])));
    const double encode_ms = ms_since(t1);
    auto t2 = Clock::now();
    Var<float> rgb = net.forward(tape, ndf);
    (void)rgb;
    const double net_ms = ms_since(t2);
    report.rasterize_ms_mean += raster_ms;
    report.encode_ms_mean += encode_ms;
    report.net_ms_mean += net_ms;
    frame_ms.push_back(raster_ms + encode_ms + net_ms);
  }
  report.rasterize_ms_mean /= static_cast<double>(frames);
  report.encode_ms_mean /= static_cast<double>(frames);
  report.net_ms_mean /= static_cast<double>(frames);
  std::vector<double> fps;
  for (double ms : frame_ms) fps.push_back(1000.0 / ms);
  for (double f : fps) report.fps_mean += f;
  report.fps_mean /= static_cast<double>(frames);
  std::sort(fps.begin(), fps.end());
  report.fps_median = fps[fps.size() / 2];
  write_text(out_ / "bench.json", report.to_json());
  return report;
}

}  // namespace dgnr
