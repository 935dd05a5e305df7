// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dgnr/adam.hpp"
#include "dgnr/checkpoint.hpp"
#include "dgnr/grad_check.hpp"
#include "dgnr/tape.hpp"
#include "doctest.h"

using namespace dgnr;

TEST_CASE("backprop: sum of linear identity") {
  Parameter<double> p("p", Tensor<double>::from({3}, {1.0, 2.0, 3.0}));
  Tape<double> t;
  auto v = t.param(p);
  auto loss = sum_all(v);
  t.backward(loss);
  CHECK(p.grad.data[0] == doctest::Approx(1.0));
  CHECK(p.grad.data[1] == doctest::Approx(1.0));
  CHECK(p.grad.data[2] == doctest::Approx(1.0));
}

TEST_CASE("backprop: sum of squares") {
  Parameter<double> p("p", Tensor<double>::from({3}, {1.0, 2.0, 3.0}));
  Tape<double> t;
  auto v = t.param(p);
  auto loss = sum_all(v * v);
  CHECK(loss.val().value() == doctest::Approx(14.0));
  t.backward(loss);
  CHECK(p.grad.data[0] == doctest::Approx(2.0));
  CHECK(p.grad.data[1] == doctest::Approx(4.0));
  CHECK(p.grad.data[2] == doctest::Approx(6.0));
}

TEST_CASE("backprop accumulates across calls") {
  Parameter<double> p("p", Tensor<double>::from({2}, {1.0, -1.0}));
  for (int rep = 0; rep < 2; ++rep) {
    Tape<double> t;
    auto loss = sum_all(t.param(p) * t.param(p));
    t.backward(loss);
  }
  CHECK(p.grad.data[0] == doctest::Approx(4.0));
  CHECK(p.grad.data[1] == doctest::Approx(-4.0));
  p.zero_grad();
  CHECK(p.grad.data[0] == 0.0);
}

TEST_CASE("backward rejects non-scalar and non-finite losses") {
  Parameter<double> p("p", Tensor<double>::from({2}, {1.0, 2.0}));
  Tape<double> t;
  auto v = t.param(p);
  CHECK_THROWS_AS(t.backward(v), std::invalid_argument);

  Parameter<double> q("q", Tensor<double>::from({1}, {1e308}));
  Tape<double> t2;
  auto w = t2.param(q);
  auto bad = w * w;  // overflows to inf
  CHECK_THROWS_AS(t2.backward(bad), std::runtime_error);
}

TEST_CASE("grad_check: identity is exact") {
  double err = grad_check(
      [](Tape<double>&, const std::vector<Var<double>>& in) { return in[0]; }, {Shape{5}}, 7);
  CHECK(err <= 1e-9);
}

TEST_CASE("grad_check: every primitive under 1e-3 over 10 seeds") {
  GradCheckOptions opt;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    // add/sub/mul with broadcasting
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return in[0] + in[1];
          }, {Shape{3, 4}, Shape{1, 4}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return in[0] - in[1];
          }, {Shape{3, 4}, Shape{3, 1}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return in[0] * in[1];
          }, {Shape{2, 3, 4}, Shape{3, 1}}, seed, opt) < 1e-3);
    // activations
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return vexp(in[0]);
          }, {Shape{6}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return sigmoid(in[0]);
          }, {Shape{6}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return softplus(in[0]);
          }, {Shape{6}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return elu(in[0]);
          }, {Shape{6}}, seed, opt) < 1e-3);
    // reductions
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return sum_last(in[0]);
          }, {Shape{3, 5}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return cumsum_exclusive(in[0]);
          }, {Shape{2, 6}}, seed, opt) < 1e-3);
    // linear algebra
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return linear(in[0], in[1], in[2]);
          }, {Shape{3, 4}, Shape{4, 2}, Shape{2}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return transpose(matmul(in[0], in[1]));
          }, {Shape{2, 3}, Shape{3, 2}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return slice2(in[0], 1, 2, 0, 3);
          }, {Shape{4, 3}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return concat_cols(std::vector<Var<double>>{in[0], in[1]});
          }, {Shape{3, 2}, Shape{3, 4}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return concat_axis0(std::vector<Var<double>>{in[0], in[1]});
          }, {Shape{2, 3, 3}, Shape{1, 3, 3}}, seed, opt) < 1e-3);
    // conv / resampling
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return conv2d(in[0], in[1], in[2]);
          }, {Shape{2, 5, 6}, Shape{3, 2, 3, 3}, Shape{3}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return conv2d(in[0], in[1], Var<double>{});
          }, {Shape{2, 4, 4}, Shape{2, 2, 1, 1}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return avg_pool2(in[0]);
          }, {Shape{2, 4, 6}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return upsample_nearest2(in[0]);
          }, {Shape{2, 3, 4}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return resize_nearest(in[0], 5, 3);
          }, {Shape{2, 3, 4}}, seed, opt) < 1e-3);
    // gather / scatter
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return gather_rows(in[0], {2, 0, -1, 1, 2});
          }, {Shape{3, 4}}, seed, opt) < 1e-3);
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            std::vector<int32_t> idx = {0, 1, 2, 2, 3, 0};
            std::vector<double> w = {0.25, 0.5, 0.25, 0.1, 0.7, 0.2};
            return weighted_gather(in[0], idx, w, 3);
          }, {Shape{4, 2}}, seed, opt) < 1e-3);
    // reshape + scale_add
    CHECK(grad_check([](Tape<double>&, const std::vector<Var<double>>& in) {
            return scale_add(reshape(in[0], {6}), 2.5, -1.0);
          }, {Shape{2, 3}}, seed, opt) < 1e-3);
  }
}

TEST_CASE("forward determinism: same seed bit-identical") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    Parameter<float> w("w", Tensor<float>::uniform({4, 4}, rng, -1.f, 1.f));
    Parameter<float> x("x", Tensor<float>::uniform({2, 4}, rng, -1.f, 1.f));
    Tape<float> t;
    auto out = sigmoid(matmul(t.param(x), t.param(w)));
    return out.val();
  };
  auto a = run(42), b = run(42);
  REQUIRE(a.size() == b.size());
  for (Index i = 0; i < a.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("adam: zero gradient leaves value unchanged") {
  Parameter<float> p("p", Tensor<float>::from({3}, {1.f, 2.f, 3.f}));
  AdamState<float> st(p.value.shape, 0.001);
  adam_step(p, st);
  CHECK(p.value.data[0] == doctest::Approx(1.f));
  CHECK(p.value.data[2] == doctest::Approx(3.f));
  CHECK(st.step == 1);
}

TEST_CASE("adam: first step with unit gradient moves by about lr") {
  Parameter<double> p("p", Tensor<double>::from({4}, {0.5, 0.5, 0.5, 0.5}));
  p.grad.data.setConstant(1.0);
  AdamState<double> st(p.value.shape, 0.001);
  adam_step(p, st);
  for (Index i = 0; i < 4; ++i)
    CHECK(p.value.data[i] == doctest::Approx(0.5 - 0.001).epsilon(1e-4));
}

TEST_CASE("adam: two steps match hand-rolled recurrence") {
  const double g1 = 0.3, g2 = -0.7, lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Parameter<double> p("p", Tensor<double>::from({1}, {1.0}));
  AdamState<double> st(p.value.shape, lr);

  double m = 0, v = 0, x = 1.0;
  for (int step = 1; step <= 2; ++step) {
    const double g = step == 1 ? g1 : g2;
    p.grad.data.setConstant(g);
    adam_step(p, st);
    p.zero_grad();
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, step));
    const double vhat = v / (1 - std::pow(b2, step));
    x -= lr * mhat / (std::sqrt(vhat) + eps);
    CHECK(p.value.data[0] == doctest::Approx(x).epsilon(1e-12));
    CHECK(st.first_moment.data[0] == doctest::Approx(m).epsilon(1e-12));
    CHECK(st.second_moment.data[0] == doctest::Approx(v).epsilon(1e-12));
  }
  CHECK(st.step == 2);
}

TEST_CASE("adam: zero eps rejected") {
  Parameter<double> p("p", Tensor<double>::from({1}, {1.0}));
  AdamState<double> st(p.value.shape, 0.001);
  st.eps = 0.0;
  CHECK_THROWS_AS(adam_step(p, st), std::invalid_argument);
}

TEST_CASE("lr decay hits both endpoints") {
  CHECK(exp_decay_lr(1e-3, 1e-6, 0, 1000) == doctest::Approx(1e-3));
  CHECK(exp_decay_lr(1e-3, 1e-6, 1000, 1000) == doctest::Approx(1e-6));
  CHECK(exp_decay_lr(1e-3, 1e-6, 2000, 1000) == doctest::Approx(1e-6));
  CHECK(exp_decay_lr(1e-3, 1e-6, 500, 1000) == doctest::Approx(std::sqrt(1e-3 * 1e-6)));
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "dgnr_test_ckpt.bin";
  Rng rng(99);
  Tensor<float> a = Tensor<float>::uniform({3, 5}, rng, -10.f, 10.f);
  Tensor<double> b = Tensor<double>::uniform({7}, rng, -1.0, 1.0);
  Tensor<int32_t> c({2, 2});
  c.data << 1, -2, 3, -4;
  write_checkpoint(path, {to_blob("a", a), to_blob("b", b), to_blob("idx", c)});
  auto recs = read_checkpoint(path);
  REQUIRE(recs.size() == 3);
  auto a2 = from_blob<float>(recs[0]);
  auto b2 = from_blob<double>(recs[1]);
  auto c2 = from_blob<int32_t>(recs[2]);
  CHECK(a2.shape == a.shape);
  for (Index i = 0; i < a.size(); ++i) CHECK(a2.data[i] == a.data[i]);
  for (Index i = 0; i < b.size(); ++i) CHECK(b2.data[i] == b.data[i]);
  for (Index i = 0; i < c.size(); ++i) CHECK(c2.data[i] == c.data[i]);
  fs::remove(path);
}

TEST_CASE("checkpoint rejects corrupt files") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "dgnr_test_bad.bin";
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE";
  }
  CHECK_THROWS_AS(read_checkpoint(path), std::runtime_error);
  fs::remove(path);
}

TEST_CASE("save/load params by name") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "dgnr_test_params.bin";
  Rng rng(5);
  Parameter<float> w("net.w", Tensor<float>::uniform({4, 3}, rng, -1.f, 1.f));
  Parameter<float> b("net.b", Tensor<float>::uniform({3}, rng, -1.f, 1.f));
  ParamSet<float> ps;
  ps.add(w);
  ps.add(b);
  save_params(path, ps);

  Parameter<float> w2("net.w", Tensor<float>({4, 3}));
  Parameter<float> b2("net.b", Tensor<float>({3}));
  ParamSet<float> ps2;
  ps2.add(w2);
  ps2.add(b2);
  load_params(path, ps2);
  for (Index i = 0; i < w.size(); ++i) CHECK(w2.value.data[i] == w.value.data[i]);
  for (Index i = 0; i < b.size(); ++i) CHECK(b2.value.data[i] == b.value.data[i]);
  fs::remove(path);
}

TEST_CASE("rng: derive_seed is stable and label-sensitive") {
  CHECK(derive_seed(1, "stage", 0) == derive_seed(1, "stage", 0));
  CHECK(derive_seed(1, "stage", 0) != derive_seed(1, "stage", 1));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "b", 0));
  CHECK(derive_seed(1, "a", 0) != derive_seed(2, "a", 0));
}
