// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#include <set>

#include "dgnr/grad_check.hpp"
#include "dgnr/train_renderer.hpp"
#include "doctest.h"

using namespace dgnr;

namespace {

RendererConfig tiny_renderer_config() {
  RendererConfig cfg;
  cfg.feature_dim = 4;
  cfg.base_width = 8;
  cfg.widths = {8, 8, 12, 12};
  cfg.detail_width = 8;
  return cfg;
}

PerceptualConfig tiny_perceptual_config() {
  PerceptualConfig cfg;
  cfg.channels = {8, 12, 12, 16, 16};
  return cfg;
}

// A small space with points sprinkled in front of a camera.
DensitySpace toy_space(Index n, uint64_t seed) {
  Rng rng(seed);
  std::vector<DensityPoint> pts(static_cast<size_t>(n));
  for (auto& p : pts)
    p.position = Eigen::Vector3f(static_cast<float>(rng.uniform(-1.2, 1.2)),
                                 static_cast<float>(rng.uniform(-1.2, 1.2)),
                                 static_cast<float>(rng.uniform(1.0, 5.0)));
  Tensor<float> desc = Tensor<float>::uniform({n, 8}, rng, -0.01f, 0.01f);
  return make_space(std::move(pts), std::move(desc));
}

CameraModel toy_camera(Index w, Index h) {
  CameraModel cam;
  cam.fx = cam.fy = static_cast<double>(w) * 0.8;
  cam.cx = 0.5 * (w - 1);
  cam.cy = 0.5 * (h - 1);
  cam.width = w;
  cam.height = h;
  return cam;
}

}  // namespace

TEST_CASE("gated_conv: zero weights give the identity map exactly") {
  Rng rng(1);
  GatedConvBlock<double> block("b", 3, rng);
  block.wf.value.data.setZero();
  block.bf.value.data.setZero();
  block.wg.value.data.setZero();
  block.bg.value.data.setZero();
  Tape<double> tape;
  Tensor<double> x = Tensor<double>::uniform({3, 5, 4}, rng, -2.0, 2.0);
  Var<double> out = gated_conv(tape, tape.constant(x), block);
  for (Index i = 0; i < x.size(); ++i) CHECK(out.val().data[i] == x.data[i]);
}

TEST_CASE("gated_conv: 1x1 single-channel hand case gives 1.5") {
  Rng rng(2);
  GatedConvBlock<double> block("b", 1, rng, 1);
  block.wf.value.data.setConstant(1.0);
  block.bf.value.data.setZero();
  block.wg.value.data.setZero();
  block.bg.value.data.setZero();
  Tape<double> tape;
  Tensor<double> x(Shape{1, 1, 1}, 1.0);
  Var<double> out = gated_conv(tape, tape.constant(x), block);
  CHECK(out.val().data[0] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("gated_conv: gradients over all parameters pass grad_check") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    double err = grad_check(
        [](Tape<double>& tape, const std::vector<Var<double>>& in) {
          Var<double> feat = elu(conv2d(in[0], in[1], in[2]));
          Var<double> gate = sigmoid(conv2d(in[0], in[3], in[4]));
          return in[0] + feat * gate;
        },
        {Shape{2, 4, 4}, Shape{2, 2, 3, 3}, Shape{2}, Shape{2, 2, 3, 3}, Shape{2}}, seed);
    CHECK(err < 1e-3);
  }
}

TEST_CASE("detail_enhance: zero and all-ones detail, gradients") {
  Tape<double> tape;
  Rng rng(3);
  Tensor<double> fr = Tensor<double>::uniform({2, 3, 3}, rng, -1.0, 1.0);
  Var<double> vfr = tape.constant(fr);
  Var<double> zero = tape.constant(Tensor<double>({2, 3, 3}));
  Var<double> ones = tape.constant(Tensor<double>({2, 3, 3}, 1.0));
  Var<double> same = detail_enhance(vfr, zero);
  Var<double> twice = detail_enhance(vfr, ones);
  for (Index i = 0; i < fr.size(); ++i) {
    CHECK(same.val().data[i] == doctest::Approx(fr.data[i]).epsilon(1e-12));
    CHECK(twice.val().data[i] == doctest::Approx(2.0 * fr.data[i]).epsilon(1e-12));
  }
  Tensor<double> bad(Shape{2, 3, 4});
  CHECK_THROWS_AS(detail_enhance(vfr, tape.constant(bad)), std::invalid_argument);

  for (uint64_t seed = 1; seed <= 10; ++seed) {
    double err = grad_check(
        [](Tape<double>&, const std::vector<Var<double>>& in) {
          return detail_enhance(in[0], in[1]);
        },
        {Shape{2, 3, 3}, Shape{2, 3, 3}}, seed);
    CHECK(err < 1e-3);
  }
}

TEST_CASE("render_view: empty space yields a finite in-range image; deterministic") {
  DensitySpace space = make_space({}, Tensor<float>(Shape{0, 8}));
  RendererNet<float> net(tiny_renderer_config(), 7);
  FeatureEncoder<float> enc(4, 8, 4, 7);
  RasterConfig rcfg;
  CameraModel cam = toy_camera(16, 16);
  Image img = render_view(space, cam, net, enc, rcfg);
  REQUIRE(img.width == 16);
  for (Index i = 0; i < img.chw.size(); ++i) {
    CHECK(std::isfinite(img.chw.data[i]));
    CHECK(img.chw.data[i] >= 0.0f);
    CHECK(img.chw.data[i] <= 1.0f);
  }
  Image img2 = render_view(space, cam, net, enc, rcfg);
  for (Index i = 0; i < img.chw.size(); ++i) CHECK(img.chw.data[i] == img2.chw.data[i]);

  // non-empty space: output range still holds
  DensitySpace space2 = toy_space(200, 11);
  Image img3 = render_view(space2, cam, net, enc, rcfg);
  for (Index i = 0; i < img3.chw.size(); ++i) {
    CHECK(img3.chw.data[i] >= 0.0f);
    CHECK(img3.chw.data[i] <= 1.0f);
  }
}

TEST_CASE("perceptual_loss: zero at identity, symmetric, monotone under noise") {
  PerceptualExtractor<double> ex(tiny_perceptual_config());
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor<double> img = Tensor<double>::uniform({3, 16, 16}, rng, 0.0, 1.0);
    Tape<double> t;
    Var<double> loss0 = perceptual_loss(t, t.constant(img), img, ex);
    CHECK(loss0.val().value() == doctest::Approx(0.0).epsilon(1e-12));

    Tensor<double> noise = Tensor<double>::normal({3, 16, 16}, rng, 1.0);
    double prev = 0.0;
    for (double eps : {0.01, 0.05, 0.1}) {
      Tensor<double> noisy = img;
      noisy.data += eps * noise.data;
      Tape<double> t2;
      double loss = perceptual_loss(t2, t2.constant(noisy), img, ex).val().value();
      CHECK(loss >= prev);
      prev = loss;
    }

    // symmetry
    Tensor<double> other = Tensor<double>::uniform({3, 16, 16}, rng, 0.0, 1.0);
    Tape<double> t3;
    double ab = perceptual_loss(t3, t3.constant(img), other, ex).val().value();
    Tape<double> t4;
    double ba = perceptual_loss(t4, t4.constant(other), img, ex).val().value();
    CHECK(ab == doctest::Approx(ba).epsilon(1e-9));
  }
}

TEST_CASE("perceptual extractor: deterministic per seed, has >= 2 scales") {
  PerceptualExtractor<float> a(tiny_perceptual_config());
  PerceptualExtractor<float> b(tiny_perceptual_config());
  for (size_t i = 0; i < a.kernels.size(); ++i)
    for (Index j = 0; j < a.kernels[i].size(); ++j)
      CHECK(a.kernels[i].data[j] == b.kernels[i].data[j]);
  auto scales = a.selected_scales();
  std::set<Index> uniq(scales.begin(), scales.end());
  CHECK(uniq.size() >= 2);
}

TEST_CASE("perceptual extractor: loads real weights from a checkpoint") {
  namespace fs = std::filesystem;
  PerceptualConfig cfg = tiny_perceptual_config();
  PerceptualExtractor<float> seeded(cfg);
  const fs::path path = fs::temp_directory_path() / "dgnr_test_vgg.ckpt";
  std::vector<NamedBlob> recs;
  for (size_t i = 0; i < seeded.kernels.size(); ++i) {
    recs.push_back(to_blob("conv" + std::to_string(i) + ".w", seeded.kernels[i]));
    recs.push_back(to_blob("conv" + std::to_string(i) + ".b", seeded.biases[i]));
  }
  write_checkpoint(path, recs);
  PerceptualConfig cfg2 = cfg;
  cfg2.weights_path = path.string();
  PerceptualExtractor<float> loaded(cfg2);
  for (size_t i = 0; i < seeded.kernels.size(); ++i)
    for (Index j = 0; j < seeded.kernels[i].size(); ++j)
      CHECK(loaded.kernels[i].data[j] == seeded.kernels[i].data[j]);
  fs::remove(path);
}

TEST_CASE("perceptual patch scores: zero on identical, localized on patch edits") {
  PerceptualExtractor<float> ex(tiny_perceptual_config());
  Rng rng(6);
  Tensor<float> img = Tensor<float>::uniform({3, 32, 32}, rng, 0.0f, 1.0f);
  Tensor<float> same = perceptual_patch_scores(img, img, ex, 8);
  REQUIRE(same.shape == Shape{4, 4});
  for (Index i = 0; i < same.size(); ++i) CHECK(same.data[i] == 0.0f);

  // corrupt one patch; its score dominates
  Tensor<float> edited = img;
  for (Index c = 0; c < 3; ++c)
    for (Index y = 8; y < 16; ++y)
      for (Index x = 16; x < 24; ++x)
        edited.data[(c * 32 + y) * 32 + x] = 1.0f - edited.data[(c * 32 + y) * 32 + x];
  Tensor<float> scores = perceptual_patch_scores(edited, img, ex, 8);
  Index best = 0;
  for (Index i = 1; i < scores.size(); ++i)
    if (scores.data[i] > scores.data[best]) best = i;
  CHECK(best == 1 * 4 + 2);  // patch row 1, col 2
}

TEST_CASE("train_renderer: zero steps computes scores without touching the net") {
  DensitySpace space = toy_space(150, 12);
  Dataset ds;
  Rng rng(8);
  for (int i = 0; i < 3; ++i) {
    Frame f;
    f.camera = toy_camera(16, 16);
    f.camera.T = Vec3(0.1 * i, 0, 0);
    f.image = Image(16, 16);
    for (Index j = 0; j < f.image.chw.size(); ++j)
      f.image.chw.data[j] = static_cast<float>(rng.uniform());
    ds.frames.push_back(std::move(f));
  }
  RendererNet<float> net(tiny_renderer_config(), 9);
  Tensor<float> w_before = net.head0.w.value;
  FeatureEncoder<float> enc(4, 8, 4, 9);
  PerceptualExtractor<float> ex(tiny_perceptual_config());
  RasterConfig rcfg;
  RendererTrainConfig tcfg;
  tcfg.steps = 0;
  tcfg.s_patch = 8;
  auto result = train_renderer(space, ds, {0, 1, 2}, net, enc, ex, rcfg, tcfg, 13);
  CHECK(result.loss_curve.empty());
  REQUIRE(result.patch_scores.scores.size() == 3);
  CHECK(result.patch_scores.patch_rows == 2);
  CHECK(result.patch_scores.patch_cols == 2);
  for (Index i = 0; i < w_before.size(); ++i)
    CHECK(net.head0.w.value.data[i] == w_before.data[i]);
  CHECK(result.patch_score_mean > 0.0);
}

TEST_CASE("train_renderer: loss drops 5x on a toy scene; tau flows, unseen rows frozen") {
  // Render target: project the toy points through a fixed pattern so the
  // descriptors must learn view-consistent content.
  DensitySpace space = toy_space(120, 21);
  Dataset ds;
  Rng rng(22);
  for (int i = 0; i < 2; ++i) {
    Frame f;
    f.camera = toy_camera(16, 16);
    f.camera.T = Vec3(0.05 * i, 0, 0);
    f.image = Image(16, 16);
    for (Index y = 0; y < 16; ++y)
      for (Index x = 0; x < 16; ++x) {
        f.image.at(0, y, x) = (x / 4 + y / 4) % 2 ? 0.9f : 0.1f;
        f.image.at(1, y, x) = 0.5f;
        f.image.at(2, y, x) = static_cast<float>(x) / 15.0f;
      }
    ds.frames.push_back(std::move(f));
  }
  // Add a point far outside every frustum; its descriptor must stay put.
  DensityPoint outsider;
  outsider.position = Eigen::Vector3f(0, 0, -50);
  std::vector<DensityPoint> pts = space.points;
  pts.push_back(outsider);
  Tensor<float> desc(Shape{space.size() + 1, 8});
  desc.data.segment(0, space.descriptors.size()) = space.descriptors.data;
  for (Index c = 0; c < 8; ++c) desc.data[space.size() * 8 + c] = 0.123f;
  space = make_space(std::move(pts), std::move(desc));

  RendererNet<float> net(tiny_renderer_config(), 31);
  FeatureEncoder<float> enc(4, 8, 4, 31);
  PerceptualExtractor<float> ex(tiny_perceptual_config());
  RasterConfig rcfg;
  RendererTrainConfig tcfg;
  tcfg.steps = 500;
  tcfg.lr = 3e-3;
  tcfg.lr_end = 1e-4;
  tcfg.s_patch = 8;
  tcfg.log_every = 0;
  Tensor<float> tau_before = space.descriptors;
  auto result = train_renderer(space, ds, {0, 1}, net, enc, ex, rcfg, tcfg, 77);
  REQUIRE(result.loss_curve.size() == 500);
  CHECK(result.loss_curve.back() <= result.loss_curve.front() / 5.0);

  // the outsider descriptor is bit-identical; at least one visible point moved
  for (Index c = 0; c < 8; ++c)
    CHECK(space.descriptors.data[space.size() * 8 - 8 + c] == 0.123f);
  double moved = 0;
  for (Index i = 0; i + 8 < space.descriptors.size(); ++i)
    moved += std::abs(space.descriptors.data[i] - tau_before.data[i]);
  CHECK(moved > 0.0);
}

TEST_CASE("end-to-end FD: d(perceptual)/d(tau) on a 16x16 view with 40 points") {
  DensitySpace space = toy_space(40, 41);
  CameraModel cam = toy_camera(16, 16);
  RasterConfig rcfg;
  FeaturePyramid pyr = rasterize(space.positions_as<double>(), cam, rcfg);
  RendererNet<double> net(tiny_renderer_config(), 51);
  FeatureEncoder<double> enc(4, 8, 4, 51);
  PerceptualExtractor<double> ex(tiny_perceptual_config());
  Rng rng(52);
  Tensor<double> target = Tensor<double>::uniform({3, 16, 16}, rng, 0.0, 1.0);
  double err = grad_check(
      [&](Tape<double>& tape, const std::vector<Var<double>>& in) {
        Var<double> rendered = render_view_vars(tape, pyr, in[0], enc, net);
        return perceptual_loss(tape, rendered, target, ex);
      },
      {Shape{40, 8}}, 99);
  CHECK(err < 1e-2);
}
