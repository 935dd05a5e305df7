// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Per-block radiance field: hash-encoded positions and SH-encoded directions
// feed two small fully-connected branches predicting density (softplus) and
// color (sigmoid). Tape path for training, raw path for inference; both share
// the same parameters and must agree.
#pragma once

#include <vector>

#include "dgnr/hash_grid.hpp"
#include "dgnr/sh.hpp"

namespace dgnr {

struct FieldConfig {
  HashGridConfig grid;
  Index hidden = 64;
  Index geo_features = 15;
  double near = 0.05;
  double far = 45.0;
  Index coarse_samples = 40;
  Index fine_samples = 40;
  double last_delta_cap = 0.5;
  // Fixed gain on the raw density output before softplus; lets the optimizer
  // reach high solid densities in a desk-scale step budget.
  double density_scale = 10.0;
  Eigen::Vector3f background = Eigen::Vector3f(0.5f, 0.5f, 0.5f);
};

template <class S>
struct FieldEvalVars {
  Var<S> sigma;                  // [P]
  std::array<Var<S>, 3> color;   // each [P]
};

template <class S>
struct RadianceField {
  using Scalar = S;
  FieldConfig cfg;
  HashGrid<S> grid;
  Parameter<S> dw1, db1, dw2, db2;  // density branch
  Parameter<S> cw1, cb1, cw2, cb2;  // color branch

  RadianceField() = default;
  RadianceField(FieldConfig c, uint64_t seed) : cfg(c), grid(c.grid, seed) {
    Rng rng(derive_seed(seed, "field_mlp"));
    const Index enc = cfg.grid.encoded_width();
    const Index geo = cfg.geo_features;
    auto he = [&rng](Shape sh) {
      const double stddev = std::sqrt(2.0 / static_cast<double>(sh[0]));
      return Tensor<S>::normal(std::move(sh), rng, static_cast<S>(stddev));
    };
    dw1 = Parameter<S>("field.density.w1", he({enc, cfg.hidden}));
    db1 = Parameter<S>("field.density.b1", Tensor<S>({cfg.hidden}));
    dw2 = Parameter<S>("field.density.w2", he({cfg.hidden, 1 + geo}));
    db2 = Parameter<S>("field.density.b2", Tensor<S>({1 + geo}));
    cw1 = Parameter<S>("field.color.w1", he({geo + kShBasisSize, cfg.hidden}));
    cb1 = Parameter<S>("field.color.b1", Tensor<S>({cfg.hidden}));
    cw2 = Parameter<S>("field.color.w2", he({cfg.hidden, 3}));
    cb2 = Parameter<S>("field.color.b2", Tensor<S>({3}));
  }

  ParamSet<S> params() {
    ParamSet<S> ps;
    ps.add(grid.table);
    for (Parameter<S>* p : {&dw1, &db1, &dw2, &db2, &cw1, &cb1, &cw2, &cb2}) ps.add(*p);
    return ps;
  }

  bool looks_untrained() const {
    return grid.table.value.data.abs().maxCoeff() == S(0);
  }

  // Differentiable evaluation at P (position, direction) pairs.
  FieldEvalVars<S> eval(Tape<S>& tape, const std::vector<Vec3>& pos,
                        const std::vector<Vec3>& dirs) {
    check_arg(pos.size() == dirs.size(), "field eval: position/direction count mismatch");
    const Index p = static_cast<Index>(pos.size());
    Var<S> enc = hash_encode(tape, grid, pos);
    Var<S> h = elu(linear(enc, tape.param(dw1), tape.param(db1)));
    Var<S> g = linear(h, tape.param(dw2), tape.param(db2));
    Var<S> raw_sigma = scale_add(reshape(slice2(g, 0, p, 0, 1), {p}),
                                 static_cast<S>(cfg.density_scale), S(0));
    Var<S> sigma = softplus(raw_sigma);
    Var<S> geo = slice2(g, 0, p, 1, cfg.geo_features);
    Var<S> sh = tape.constant(sh_encode_batch<S>(dirs));
    Var<S> cin = concat_cols(std::vector<Var<S>>{geo, sh});
    Var<S> ch = elu(linear(cin, tape.param(cw1), tape.param(cb1)));
    Var<S> rgb = sigmoid(linear(ch, tape.param(cw2), tape.param(cb2)));  // [P,3]
    FieldEvalVars<S> out;
    out.sigma = sigma;
    for (Index c = 0; c < 3; ++c) out.color[c] = reshape(slice2(rgb, 0, p, c, 1), {p});
    if (!out.sigma.val().all_finite() || !rgb.val().all_finite())
      throw std::runtime_error("field eval: non-finite intermediate");
    return out;
  }

  // Raw density-only evaluation (importance sampling, extraction).
  Tensor<S> density_raw(const std::vector<Vec3>& pos) const {
    Tensor<S> feats = hash_encode_raw(grid, pos);
    const Index p = feats.shape[0];
    Tensor<S> h(Shape{p, cfg.hidden});
    h.mat().noalias() = feats.mat() * dw1.value.mat();
    h.mat().rowwise() +=
        Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(db1.value.ptr(), cfg.hidden);
    for (Index i = 0; i < h.size(); ++i) h.data[i] = elu_s(h.data[i]);
    // Only the first output channel is needed.
    Tensor<S> sigma(Shape{p});
    auto w2col = dw2.value.mat().col(0);
    const S gain = static_cast<S>(cfg.density_scale);
    for (Index i = 0; i < p; ++i)
      sigma.data[i] = softplus_s(gain * (S(h.mat().row(i) * w2col) + db2.value.data[0]));
    return sigma;
  }

  // Raw full evaluation: sigma [P], rgb [P,3].
  void eval_raw(const std::vector<Vec3>& pos, const std::vector<Vec3>& dirs, Tensor<S>& sigma,
                Tensor<S>& rgb) const {
    Tensor<S> feats = hash_encode_raw(grid, pos);
    const Index p = feats.shape[0];
    const Index geo = cfg.geo_features;
    Tensor<S> h(Shape{p, cfg.hidden});
    h.mat().noalias() = feats.mat() * dw1.value.mat();
    h.mat().rowwise() +=
        Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(db1.value.ptr(), cfg.hidden);
    for (Index i = 0; i < h.size(); ++i) h.data[i] = elu_s(h.data[i]);
    Tensor<S> g(Shape{p, 1 + geo});
    g.mat().noalias() = h.mat() * dw2.value.mat();
    g.mat().rowwise() +=
        Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(db2.value.ptr(), 1 + geo);
    sigma = Tensor<S>(Shape{p});
    const S gain = static_cast<S>(cfg.density_scale);
    for (Index i = 0; i < p; ++i)
      sigma.data[i] = softplus_s(gain * g.data[i * (1 + geo)]);
    Tensor<S> sh = sh_encode_batch<S>(dirs);
    Tensor<S> cin(Shape{p, geo + kShBasisSize});
    cin.mat().middleCols(0, geo) = g.mat().middleCols(1, geo);
    cin.mat().middleCols(geo, kShBasisSize) = sh.mat();
    Tensor<S> ch(Shape{p, cfg.hidden});
    ch.mat().noalias() = cin.mat() * cw1.value.mat();
    ch.mat().rowwise() +=
        Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(cb1.value.ptr(), cfg.hidden);
    for (Index i = 0; i < ch.size(); ++i) ch.data[i] = elu_s(ch.data[i]);
    rgb = Tensor<S>(Shape{p, 3});
    rgb.mat().noalias() = ch.mat() * cw2.value.mat();
    rgb.mat().rowwise() +=
        Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(cb2.value.ptr(), 3);
    for (Index i = 0; i < rgb.size(); ++i) rgb.data[i] = sigmoid_s(rgb.data[i]);
  }
};

}  // namespace dgnr
