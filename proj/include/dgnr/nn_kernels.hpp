// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Raw forward/backward compute kernels shared by the tape ops and the
// no-autodiff inference paths.
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "dgnr/tensor.hpp"

namespace dgnr {

template <class S>
inline S sigmoid_s(S x) {
  if (x >= S(0)) {
    S e = std::exp(-x);
    return S(1) / (S(1) + e);
  }
  S e = std::exp(x);
  return e / (S(1) + e);
}

template <class S>
inline S softplus_s(S x) {
  if (x > S(20)) return x;
  if (x < S(-20)) return std::exp(x);
  return std::log1p(std::exp(x));
}

template <class S>
inline S elu_s(S x) {
  return x >= S(0) ? x : std::expm1(x);
}

template <class S>
inline S elu_grad_s(S x) {
  return x >= S(0) ? S(1) : std::exp(x);
}

// ---- convolution (stride 1, zero "same" padding, odd kernel) ----

// patches: col-major [Cin*kh*kw, H*W]; column p holds the receptive field of
// output pixel p.
template <class S>
void im2col(const S* in, Index cin, Index h, Index w, Index kh, Index kw,
            Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& patches) {
  const Index ph = kh / 2, pw = kw / 2;
  const Index hw = h * w;
  patches.resize(cin * kh * kw, hw);
  for (Index p = 0; p < hw; ++p) {
    const Index y = p / w, x = p % w;
    S* col = patches.col(p).data();
    Index r = 0;
    for (Index c = 0; c < cin; ++c) {
      const S* plane = in + c * hw;
      for (Index ky = 0; ky < kh; ++ky) {
        const Index iy = y + ky - ph;
        for (Index kx = 0; kx < kw; ++kx, ++r) {
          const Index ix = x + kx - pw;
          col[r] = (iy >= 0 && iy < h && ix >= 0 && ix < w) ? plane[iy * w + ix] : S(0);
        }
      }
    }
  }
}

template <class S>
void col2im_add(const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& cols, Index cin, Index h,
                Index w, Index kh, Index kw, S* out) {
  const Index ph = kh / 2, pw = kw / 2;
  const Index hw = h * w;
  for (Index p = 0; p < hw; ++p) {
    const Index y = p / w, x = p % w;
    const S* col = cols.col(p).data();
    Index r = 0;
    for (Index c = 0; c < cin; ++c) {
      S* plane = out + c * hw;
      for (Index ky = 0; ky < kh; ++ky) {
        const Index iy = y + ky - ph;
        for (Index kx = 0; kx < kw; ++kx, ++r) {
          const Index ix = x + kx - pw;
          if (iy >= 0 && iy < h && ix >= 0 && ix < w) plane[iy * w + ix] += col[r];
        }
      }
    }
  }
}

// out [Cout,H,W] = kernel [Cout,Cin,kh,kw] * in [Cin,H,W] + bias.
template <class S>
void conv2d_forward(const Tensor<S>& in, const Tensor<S>& kernel, const S* bias, Tensor<S>& out) {
  const Index cin = in.shape[0], h = in.shape[1], w = in.shape[2];
  const Index cout = kernel.shape[0], kh = kernel.shape[2], kw = kernel.shape[3];
  const Index hw = h * w;
  out = Tensor<S>(Shape{cout, h, w});
  MatMap<S> omap(out.ptr(), cout, hw);
  if (kh == 1 && kw == 1) {
    ConstMatMap<S> kmap(kernel.ptr(), cout, cin);
    ConstMatMap<S> imap(in.ptr(), cin, hw);
    omap.noalias() = kmap * imap;
  } else {
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> patches;
    im2col(in.ptr(), cin, h, w, kh, kw, patches);
    ConstMatMap<S> kmap(kernel.ptr(), cout, cin * kh * kw);
    omap.noalias() = kmap * patches;
  }
  if (bias) {
    for (Index c = 0; c < cout; ++c) out.data.segment(c * hw, hw) += bias[c];
  }
}

template <class S>
void conv2d_backward(const Tensor<S>& in, const Tensor<S>& kernel, const Tensor<S>& gout,
                     Tensor<S>* gin, Tensor<S>* gkernel, Tensor<S>* gbias) {
  const Index cin = in.shape[0], h = in.shape[1], w = in.shape[2];
  const Index cout = kernel.shape[0], kh = kernel.shape[2], kw = kernel.shape[3];
  const Index hw = h * w;
  ConstMatMap<S> gmap(gout.ptr(), cout, hw);
  if (gbias) {
    MatMap<S> gb(gbias->ptr(), cout, 1);
    gb.noalias() += gmap.rowwise().sum();
  }
  if (kh == 1 && kw == 1) {
    ConstMatMap<S> imap(in.ptr(), cin, hw);
    if (gkernel) {
      MatMap<S> gk(gkernel->ptr(), cout, cin);
      gk.noalias() += gmap * imap.transpose();
    }
    if (gin) {
      ConstMatMap<S> kmap(kernel.ptr(), cout, cin);
      MatMap<S> gi(gin->ptr(), cin, hw);
      gi.noalias() += kmap.transpose() * gmap;
    }
    return;
  }
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> patches;
  im2col(in.ptr(), cin, h, w, kh, kw, patches);
  if (gkernel) {
    MatMap<S> gk(gkernel->ptr(), cout, cin * kh * kw);
    gk.noalias() += gmap * patches.transpose();
  }
  if (gin) {
    ConstMatMap<S> kmap(kernel.ptr(), cout, cin * kh * kw);
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> cols = kmap.transpose() * gmap;
    col2im_add(cols, cin, h, w, kh, kw, gin->ptr());
  }
}

// ---- resampling on [C,H,W] ----

template <class S>
Tensor<S> avg_pool2_forward(const Tensor<S>& in) {
  const Index c = in.shape[0], h = in.shape[1], w = in.shape[2];
  check_arg(h % 2 == 0 && w % 2 == 0, "avg_pool2: H and W must be even");
  const Index h2 = h / 2, w2 = w / 2;
  Tensor<S> out(Shape{c, h2, w2});
  for (Index ch = 0; ch < c; ++ch) {
    const S* ip = in.ptr() + ch * h * w;
    S* op = out.ptr() + ch * h2 * w2;
    for (Index y = 0; y < h2; ++y)
      for (Index x = 0; x < w2; ++x) {
        const S* r0 = ip + (2 * y) * w + 2 * x;
        const S* r1 = r0 + w;
        op[y * w2 + x] = (r0[0] + r0[1] + r1[0] + r1[1]) * S(0.25);
      }
  }
  return out;
}

template <class S>
void avg_pool2_backward(const Tensor<S>& gout, Index c, Index h, Index w, Tensor<S>& gin) {
  const Index h2 = h / 2, w2 = w / 2;
  for (Index ch = 0; ch < c; ++ch) {
    const S* gp = gout.ptr() + ch * h2 * w2;
    S* ip = gin.ptr() + ch * h * w;
    for (Index y = 0; y < h2; ++y)
      for (Index x = 0; x < w2; ++x) {
        const S g = gp[y * w2 + x] * S(0.25);
        S* r0 = ip + (2 * y) * w + 2 * x;
        S* r1 = r0 + w;
        r0[0] += g;
        r0[1] += g;
        r1[0] += g;
        r1[1] += g;
      }
  }
}

// Nearest-neighbor resize; source index floor(i*H/H2) so 2x upsampling maps
// pixel i to source i/2.
template <class S>
Tensor<S> resize_nearest_forward(const Tensor<S>& in, Index h2, Index w2) {
  const Index c = in.shape[0], h = in.shape[1], w = in.shape[2];
  Tensor<S> out(Shape{c, h2, w2});
  for (Index ch = 0; ch < c; ++ch) {
    const S* ip = in.ptr() + ch * h * w;
    S* op = out.ptr() + ch * h2 * w2;
    for (Index y = 0; y < h2; ++y) {
      const Index sy = std::min(h - 1, y * h / h2);
      for (Index x = 0; x < w2; ++x) {
        const Index sx = std::min(w - 1, x * w / w2);
        op[y * w2 + x] = ip[sy * w + sx];
      }
    }
  }
  return out;
}

template <class S>
void resize_nearest_backward(const Tensor<S>& gout, Index c, Index h, Index w, Tensor<S>& gin) {
  const Index h2 = gout.shape[1], w2 = gout.shape[2];
  for (Index ch = 0; ch < c; ++ch) {
    const S* gp = gout.ptr() + ch * h2 * w2;
    S* ip = gin.ptr() + ch * h * w;
    for (Index y = 0; y < h2; ++y) {
      const Index sy = std::min(h - 1, y * h / h2);
      for (Index x = 0; x < w2; ++x) {
        const Index sx = std::min(w - 1, x * w / w2);
        ip[sy * w + sx] += gp[y * w2 + x];
      }
    }
  }
}

// ---- broadcasting ----

inline Shape broadcast_shape(const Shape& a, const Shape& b) {
  const size_t ra = a.size(), rb = b.size(), r = std::max(ra, rb);
  Shape out(r);
  for (size_t i = 0; i < r; ++i) {
    Index da = i < r - ra ? 1 : a[i - (r - ra)];
    Index db = i < r - rb ? 1 : b[i - (r - rb)];
    if (da != db && da != 1 && db != 1)
      throw std::invalid_argument("broadcast: incompatible shapes " + shape_str(a) + " vs " +
                                  shape_str(b));
    out[i] = std::max(da, db);
  }
  return out;
}

// Row-major strides with 0 for broadcast dimensions, right-aligned to rank r.
inline std::vector<Index> broadcast_strides(const Shape& s, size_t r) {
  std::vector<Index> st(r, 0);
  Index acc = 1;
  for (size_t i = 0; i < s.size(); ++i) {
    size_t j = s.size() - 1 - i;
    st[r - 1 - i] = (s[j] == 1) ? 0 : acc;
    acc *= s[j];
  }
  return st;
}

template <class S, class F>
void broadcast_binary(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& out, F&& f) {
  const Shape& os = out.shape;
  const size_t r = os.size();
  auto sa = broadcast_strides(a.shape, r);
  auto sb = broadcast_strides(b.shape, r);
  std::vector<Index> idx(r, 0);
  const Index n = out.size();
  Index ia = 0, ib = 0;
  for (Index flat = 0; flat < n; ++flat) {
    out.data[flat] = f(a.data[ia], b.data[ib]);
    for (size_t d = r; d-- > 0;) {
      if (++idx[d] < os[d]) {
        ia += sa[d];
        ib += sb[d];
        break;
      }
      idx[d] = 0;
      ia -= sa[d] * (os[d] - 1);
      ib -= sb[d] * (os[d] - 1);
    }
  }
}

// Sum g over broadcast axes so the result has `target` shape (right-aligned).
template <class S>
Tensor<S> reduce_to_shape(const Tensor<S>& g, const Shape& target) {
  if (g.shape == target) return g;
  Tensor<S> out(target);
  const size_t r = g.shape.size();
  auto st = broadcast_strides(target, r);
  std::vector<Index> idx(r, 0);
  Index it = 0;
  const Index n = g.size();
  for (Index flat = 0; flat < n; ++flat) {
    out.data[it] += g.data[flat];
    for (size_t d = r; d-- > 0;) {
      if (++idx[d] < g.shape[d]) {
        it += st[d];
        break;
      }
      idx[d] = 0;
      it -= st[d] * (g.shape[d] - 1);
    }
  }
  return out;
}

}  // namespace dgnr
