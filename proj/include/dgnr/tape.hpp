// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode tape over a fixed primitive set. Every differentiable
// computation in the project is expressed through these ops; the tape owns
// forward values and per-node gradients, and accumulates leaf gradients into
// the bound Parameters on backward().
#pragma once

#include <functional>
#include <memory>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dgnr/nn_kernels.hpp"
#include "dgnr/parameter.hpp"
#include "dgnr/tensor.hpp"

namespace dgnr {

template <class S>
class Tape;

// Lightweight handle into a tape node.
template <class S>
struct Var {
  Tape<S>* tape = nullptr;
  int32_t id = -1;

  const Tensor<S>& val() const;
  const Shape& shape() const { return val().shape; }
  bool valid() const { return tape != nullptr; }
};

template <class S>
class Tape {
 public:
  using BackFn = std::function<void(Tape&, const Tensor<S>&)>;

  struct Node {
    Tensor<S> value;
    Tensor<S> grad;  // empty until touched by backward
    BackFn back;
    bool needs_grad = false;
    Parameter<S>* bound = nullptr;
  };

  Var<S> constant(Tensor<S> v) { return push(std::move(v), false, nullptr, nullptr); }

  Var<S> param(Parameter<S>& p) {
    auto it = param_ids_.find(&p);
    if (it != param_ids_.end()) return Var<S>{this, it->second};
    Var<S> v = push(p.value, p.requires_grad, nullptr, &p);
    param_ids_[&p] = v.id;
    return v;
  }

  Var<S> push(Tensor<S> value, bool needs_grad, BackFn back, Parameter<S>* bound = nullptr) {
    nodes_.push_back(Node{std::move(value), Tensor<S>{}, std::move(back), needs_grad, bound});
    return Var<S>{this, static_cast<int32_t>(nodes_.size() - 1)};
  }

  const Tensor<S>& val(int32_t id) const { return nodes_[id].value; }
  bool needs_grad(int32_t id) const { return nodes_[id].needs_grad; }

  Tensor<S>& grad_buf(int32_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Tensor<S>(n.value.shape);
    return n.grad;
  }

  // Reverse sweep from a scalar loss; accumulates into bound Parameters.
  void backward(Var<S> loss) {
    check_arg(loss.tape == this, "backward: var from another tape");
    const Tensor<S>& lv = val(loss.id);
    check_arg(lv.is_scalar(), "backward: loss must be scalar");
    if (!std::isfinite(static_cast<double>(lv.value())))
      throw std::runtime_error("backward: non-finite loss value");
    for (auto& n : nodes_) n.grad = Tensor<S>{};
    grad_buf(loss.id).data[0] = S(1);
    for (int32_t id = loss.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.grad.size() == 0 || !n.back) continue;
      n.back(*this, n.grad);
    }
    for (auto& [p, id] : param_ids_) {
      Node& n = nodes_[id];
      if (p->requires_grad && n.grad.size() != 0) p->grad.data += n.grad.data;
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
  std::unordered_map<Parameter<S>*, int32_t> param_ids_;
};

template <class S>
const Tensor<S>& Var<S>::val() const {
  return tape->val(id);
}

namespace detail {

template <class S>
void accum(Tape<S>& t, int32_t id, const Tensor<S>& g) {
  if (!t.needs_grad(id)) return;
  t.grad_buf(id).data += g.data;
}

}  // namespace detail

// ---- elementwise binary ops (numpy-style right-aligned broadcasting) ----

template <class S, class F>
Var<S> binary_op(Var<S> a, Var<S> b, F&& f, S dfa, S dfb) {
  // dfa/dfb: +-1 multipliers used for add/sub; mul handled separately.
  Tape<S>& t = *a.tape;
  const Tensor<S>&va = a.val();
  const Tensor<S>& vb = b.val();
  Tensor<S> out;
  if (va.shape == vb.shape) {
    out = Tensor<S>(va.shape);
    for (Index i = 0; i < out.size(); ++i) out.data[i] = f(va.data[i], vb.data[i]);
  } else {
    out = Tensor<S>(broadcast_shape(va.shape, vb.shape));
    broadcast_binary(va, vb, out, f);
  }
  bool ng = t.needs_grad(a.id) || t.needs_grad(b.id);
  typename Tape<S>::BackFn back;
  if (ng) {
    auto ashape = va.shape, bshape = vb.shape;
    back = [ia = a.id, ib = b.id, ashape, bshape, dfa, dfb](Tape<S>& tp, const Tensor<S>& g) {
      if (tp.needs_grad(ia)) {
        Tensor<S> ga = g;
        ga.data *= dfa;
        detail::accum(tp, ia, reduce_to_shape(ga, ashape));
      }
      if (tp.needs_grad(ib)) {
        Tensor<S> gb = g;
        gb.data *= dfb;
        detail::accum(tp, ib, reduce_to_shape(gb, bshape));
      }
    };
  }
  return t.push(std::move(out), ng, std::move(back));
}

template <class S>
Var<S> operator+(Var<S> a, Var<S> b) {
  return binary_op(a, b, [](S x, S y) { return x + y; }, S(1), S(1));
}

template <class S>
Var<S> operator-(Var<S> a, Var<S> b) {
  return binary_op(a, b, [](S x, S y) { return x - y; }, S(1), S(-1));
}

template <class S>
Var<S> operator*(Var<S> a, Var<S> b) {
  Tape<S>& t = *a.tape;
  const Tensor<S>& va = a.val();
  const Tensor<S>& vb = b.val();
  Tensor<S> out;
  if (va.shape == vb.shape) {
    out = Tensor<S>(va.shape);
    out.data = va.data * vb.data;
  } else {
    out = Tensor<S>(broadcast_shape(va.shape, vb.shape));
    broadcast_binary(va, vb, out, [](S x, S y) { return x * y; });
  }
  bool ng = t.needs_grad(a.id) || t.needs_grad(b.id);
  typename Tape<S>::BackFn back;
  if (ng) {
    back = [ia = a.id, ib = b.id](Tape<S>& tp, const Tensor<S>& g) {
      const Tensor<S>& xa = tp.val(ia);
      const Tensor<S>& xb = tp.val(ib);
      if (tp.needs_grad(ia)) {
        Tensor<S> ga(g.shape);
        if (xb.shape == g.shape)
          ga.data = g.data * xb.data;
        else
          broadcast_binary(g, xb, ga, [](S x, S y) { return x * y; });
        detail::accum(tp, ia, reduce_to_shape(ga, xa.shape));
      }
      if (tp.needs_grad(ib)) {
        Tensor<S> gb(g.shape);
        if (xa.shape == g.shape)
          gb.data = g.data * xa.data;
        else
          broadcast_binary(g, xa, gb, [](S x, S y) { return x * y; });
        detail::accum(tp, ib, reduce_to_shape(gb, xb.shape));
      }
    };
  }
  return t.push(std::move(out), ng, std::move(back));
}

// out = a*x + b, elementwise with scalar constants.
template <class S>
Var<S> scale_add(Var<S> x, S a, S b) {
  Tape<S>& t = *x.tape;
  Tensor<S> out(x.val().shape);
  out.data = x.val().data * a + b;
  bool ng = t.needs_grad(x.id);
  typename Tape<S>::BackFn back;
  if (ng)
    back = [ix = x.id, a](Tape<S>& tp, const Tensor<S>& g) {
      Tensor<S> gx = g;
      gx.data *= a;
      detail::accum(tp, ix, gx);
    };
  return t.push(std::move(out), ng, std::move(back));
}

template <class S>
Var<S> operator-(Var<S> x) {
  return scale_add(x, S(-1), S(0));
}

// ---- elementwise unary activations ----

template <class S, class FwdF, class GradF>
Var<S> unary_op(Var<S> x, FwdF&& fwd, GradF&& grad_from_input) {
  Tape<S>& t = *x.tape;
  Tensor<S> out(x.val().shape);
  const Tensor<S>& vx = x.val();
  for (Index i = 0; i < out.size(); ++i) out.data[i] = fwd(vx.data[i]);
  bool ng = t.needs_grad(x.id);
  typename Tape<S>::BackFn back;
  if (ng)
    back = [ix = x.id, grad_from_input](Tape<S>& tp, const Tensor<S>& g) {
      const Tensor<S>& vin = tp.val(ix);
      Tensor<S> gx(g.shape);
      for (Index i = 0; i < g.size(); ++i) gx.data[i] = g.data[i] * grad_from_input(vin.data[i]);
      detail::accum(tp, ix, gx);
    };
  return t.push(std::move(out), ng, std::move(back));
}

template <class S>
Var<S> vexp(Var<S> x) {
  return unary_op(x, [](S v) { return std::exp(v); }, [](S v) { return std::exp(v); });
}

template <class S>
Var<S> sigmoid(Var<S> x) {
  return unary_op(x, [](S v) { return sigmoid_s(v); },
                  [](S v) {
                    S s = sigmoid_s(v);
                    return s * (S(1) - s);
                  });
}

template <class S>
Var<S> softplus(Var<S> x) {
  return unary_op(x, [](S v) { return softplus_s(v); }, [](S v) { return sigmoid_s(v); });
}

template <class S>
Var<S> elu(Var<S> x) {
  return unary_op(x, [](S v) { return elu_s(v); }, [](S v) { return elu_grad_s(v); });
}

// ---- reductions ----

template <class S>
Var<S> sum_all(Var<S> x) {
  Tape<S>& t = *x.tape;
  Tensor<S> out = Tensor<S>::scalar(x.val().data.sum());
  bool ng = t.needs_grad(x.id);
  typename Tape<S>::BackFn back;
  if (ng)
    back = [ix = x.id](Tape<S>& tp, const Tensor<S>& g) {
      Tensor<S> gx(tp.val(ix).shape);
      gx.data.setConstant(g.data[0]);
      detail::accum(tp, ix, gx);
    };
  return t.push(std::move(out), ng, std::move(back));
}

template <class S>
Var<S> mean_all(Var<S> x) {
  return scale_add(sum_all(x), S(1) / static_cast<S>(x.val().size()), S(0));
}

// Sum over the last axis: [d0..dn,K] -> [d0..dn]; rank-1 input reduces to a
// scalar.
template <class S>
Var<S> sum_last(Var<S> x) {
  Tape<S>& t = *x.tape;
  const Tensor<S>& vx = x.val();
  check_arg(vx.rank() >= 1, "sum_last: rank >= 1 required");
  const Index k = vx.shape.back();
  const Index rows = vx.size() / k;
  Shape oshape(vx.shape.begin(), vx.shape.end() - 1);
  if (oshape.empty()) oshape = {1};
  Tensor<S> out(oshape);
  for (Index r = 0; r < rows; ++r) out.data[r] = vx.data.segment(r * k, k).sum();
  bool ng = t.needs_grad(x.id);
  typename Tape<S>::BackFn back;
  if (ng)
    back = [ix = x.id, k, rows](Tape<S>& tp, const Tensor<S>& g) {
      Tensor<S> gx(tp.val(ix).shape);
      for (Index r = 0; r < rows; ++r) gx.data.segment(r * k, k).setConstant(g.data[r]);
      detail::accum(tp, ix, gx);
    };
  return t.push(std::move(out), ng, std::move(back));
}

// Exclusive cumulative sum along the last axis: y[...,j] = sum_{i<j} x[...,i].
template <class S>
Var<S> cumsum_exclusive(Var<S> x) {
  Tape<S>& t = *x.tape;
  const Tensor<S>& vx = x.val();
  const Index k = vx.shape.back();
  const Index rows = vx.size() / k;
  Tensor<S> out(vx.shape);
  for (Index r = 0; r < rows; ++r) {
    S acc = S(0);
    for (Index j = 0; j < k; ++j) {
      out.data[r * k + j] = acc;
      acc += vx.data[r * k + j];
    }
  }
  bool ng = t.needs_grad(x.id);
  typename Tape<S>::BackFn back;
  if (ng)
    back = [ix = x.id, k, rows](Tape<S>& tp, const Tensor<S>& g) {
      Tensor<S> gx(tp.val(ix).shape);
      for (Index r = 0; r < rows; ++r) {
        S acc = S(0);
        for (Index j = k - 1; j >= 0; --j) {
          gx.data[r * k + j] = acc;
          acc += g.data[r * k + j];
        }
      }
      detail::accum(tp, ix, gx);
    };
  return t.push(std::move(out), ng, std::move(back));
}

// ---- linear algebra ----

// out[P,N] = x[P,M] * w[M,N] (+ bias[N]).
template <class S>
Var<S> linear(Var<S> x, Var<S> w, Var<S> bias) {
  Tape<S>& t = *x.tape;
  const Tensor<S>& vx = x.val();
  const Tensor<S>& vw = w.val();
  check_arg(vx.rank() == 2 && vw.rank() == 2 && vx.shape[1] == vw.shape[0],
            "linear: shape mismatch");
  const Index p = vx.shape[0], m = vx.shape[1], n = vw.shape[1];
  Tensor<S> out(Shape{p, n});
  out.mat().noalias() = vx.mat() * vw.mat();
  const bool has_bias = bias.valid();
  if (has_bias) {
    check_arg(bias.val().size() == n, "linear: bias size mismatch");
    out.mat().rowwise() += Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(
        bias.val().ptr(), n);
  }
  bool ng = t.needs_grad(x.id) || t.needs_grad(w.id) || (has_bias && t.needs_grad(bias.id));
  typename Tape<S>::BackFn back;
  if (ng) {
    int32_t ib = has_bias ? bias.id : -1;
    back = [ix = x.id, iw = w.id, ib, p, m, n](Tape<S>& tp, const Tensor<S>& g) {
      ConstMatMap<S> gm(g.ptr(), p, n);
      if (tp.needs_grad(ix)) {
        tp.grad_buf(ix).mat(p, m).noalias() += gm * tp.val(iw).mat().transpose();
      }
      if (tp.needs_grad(iw)) {
        tp.grad_buf(iw).mat(m, n).noalias() += tp.val(ix).mat().transpose() * gm;
      }
      if (ib >= 0 && tp.needs_grad(ib)) {
        VecMap<S>(tp.grad_buf(ib).ptr(), n) +=
            gm.colwise().sum().transpose().array();
      }
    };
  }
  return t.push(std::move(out), ng, std::move(back));
}

template <class S>
Var<S> linear(Var<S> x, Var<S> w) {
  return linear(x, w, Var<S>{});
}

template <class S>
Var<S> matmul(Var<S> a, Var<S> b) {
  return linear(a, b, Var<S>{});
}

template <class S>
Var<S> transpose(Var<S> x) {
  Tape<S>& t = *x.tape;
  const Tensor<S>& vx = x.val();
  check_arg(vx.rank() == 2, "transpose: rank-2 required");
  const Index r = vx.shape[0], c = vx.shape[1];
  Tensor<S> out(Shape{c, r});
  out.mat().noalias() = vx.mat().transpose();
  bool ng = t.needs_grad(x.id);
  typename Tape<S>::BackFn back;
  if (ng)
    back = [ix = x.id, r, c](Tape<S>& tp, const Tensor<S>& g) {
      tp.grad_buf(ix).mat(r, c).noalias() += ConstMatMap<S>(g.ptr(), c, r).transpose();
    };
  return t.push(std::move(out), ng, std::move(back));
}

template <class S>
Var<S> reshape(Var<S> x, Shape sh) {
  Tape<S>& t = *x.tape;
  check_arg(shape_size(sh) == x.val().size(), "reshape: element count mismatch");
  Tensor<S> out;
  out.shape = std::move(sh);
  out.data = x.val().data;
  bool ng = t.needs_grad(x.id);
  typename Tape<S>::BackFn back;
  if (ng)
    back = [ix = x.id](Tape<S>& tp, const Tensor<S>& g) {
      tp.grad_buf(ix).data += g.data;
    };
  return t.push(std::move(out), ng, std::move(back));
}

// Submatrix copy out of a rank-2 tensor.
template <class S>
Var<S> slice2(Var<S> x, Index r0, Index nr, Index c0, Index nc) {
  Tape<S>& t = *x.tape;
  const Tensor<S>& vx = x.val();
  check_arg(vx.rank() == 2, "slice2: rank-2 required");
  check_arg(r0 >= 0 && c0 >= 0 && r0 + nr <= vx.shape[0] && c0 + nc <= vx.shape[1],
            "slice2: out of bounds");
  Tensor<S> out(Shape{nr, nc});
  out.mat().noalias() = vx.mat().block(r0, c0, nr, nc);
  bool ng = t.needs_grad(x.id);
  typename Tape<S>::BackFn back;
  if (ng)
    back = [ix = x.id, r0, nr, c0, nc](Tape<S>& tp, const Tensor<S>& g) {
      tp.grad_buf(ix).mat().block(r0, c0, nr, nc) += ConstMatMap<S>(g.ptr(), nr, nc);
    };
  return t.push(std::move(out), ng, std::move(back));
}

// Concatenate rank-2 tensors along columns.
template <class S>
Var<S> concat_cols(const std::vector<Var<S>>& xs) {
  check_arg(!xs.empty(), "concat_cols: empty input");
  Tape<S>& t = *xs[0].tape;
  const Index rows = xs[0].val().shape[0];
  Index cols = 0;
  bool ng = false;
  for (const auto& v : xs) {
    check_arg(v.val().rank() == 2 && v.val().shape[0] == rows, "concat_cols: row mismatch");
    cols += v.val().shape[1];
    ng = ng || t.needs_grad(v.id);
  }
  Tensor<S> out(Shape{rows, cols});
  Index c = 0;
  for (const auto& v : xs) {
    const Index nc = v.val().shape[1];
    out.mat().middleCols(c, nc) = v.val().mat();
    c += nc;
  }
  typename Tape<S>::BackFn back;
  if (ng) {
    std::vector<int32_t> ids;
    std::vector<Index> widths;
    for (const auto& v : xs) {
      ids.push_back(v.id);
      widths.push_back(v.val().shape[1]);
    }
    back = [ids, widths, rows, cols](Tape<S>& tp, const Tensor<S>& g) {
      ConstMatMap<S> gm(g.ptr(), rows, cols);
      Index c0 = 0;
      for (size_t i = 0; i < ids.size(); ++i) {
        if (tp.needs_grad(ids[i]))
          tp.grad_buf(ids[i]).mat(rows, widths[i]) += gm.middleCols(c0, widths[i]);
        c0 += widths[i];
      }
    };
  }
  return t.push(std::move(out), ng, std::move(back));
}

// Concatenate along axis 0; trailing dimensions must match, so this is a
// buffer concat (used for channel stacking of [C,H,W] images).
template <class S>
Var<S> concat_axis0(const std::vector<Var<S>>& xs) {
  check_arg(!xs.empty(), "concat_axis0: empty input");
  Tape<S>& t = *xs[0].tape;
  Shape trail(xs[0].val().shape.begin() + 1, xs[0].val().shape.end());
  Index d0 = 0;
  bool ng = false;
  for (const auto& v : xs) {
    Shape tr(v.val().shape.begin() + 1, v.val().shape.end());
    check_arg(tr == trail, "concat_axis0: trailing shape mismatch");
    d0 += v.val().shape[0];
    ng = ng || t.needs_grad(v.id);
  }
  Shape oshape;
  oshape.push_back(d0);
  oshape.insert(oshape.end(), trail.begin(), trail.end());
  Tensor<S> out(std::move(oshape));
  Index off = 0;
  for (const auto& v : xs) {
    out.data.segment(off, v.val().size()) = v.val().data;
    off += v.val().size();
  }
  typename Tape<S>::BackFn back;
  if (ng) {
    std::vector<int32_t> ids;
    std::vector<Index> sizes;
    for (const auto& v : xs) {
      ids.push_back(v.id);
      sizes.push_back(v.val().size());
    }
    back = [ids, sizes](Tape<S>& tp, const Tensor<S>& g) {
      Index off2 = 0;
      for (size_t i = 0; i < ids.size(); ++i) {
        if (tp.needs_grad(ids[i])) tp.grad_buf(ids[i]).data += g.data.segment(off2, sizes[i]);
        off2 += sizes[i];
      }
    };
  }
  return t.push(std::move(out), ng, std::move(back));
}

// ---- convolution and resampling ----

// 2-d convolution on [Cin,H,W], kernel [Cout,Cin,kh,kw], stride 1, zero "same"
// padding. Bias optional.
template <class S>
Var<S> conv2d(Var<S> x, Var<S> kernel, Var<S> bias) {
  Tape<S>& t = *x.tape;
  const Tensor<S>& vx = x.val();
  const Tensor<S>& vk = kernel.val();
  check_arg(vx.rank() == 3 && vk.rank() == 4, "conv2d: want [C,H,W] input, [O,C,kh,kw] kernel");
  check_arg(vk.shape[1] == vx.shape[0], "conv2d: channel mismatch");
  check_arg(vk.shape[2] % 2 == 1 && vk.shape[3] % 2 == 1, "conv2d: odd kernel only");
  const bool has_bias = bias.valid();
  if (has_bias) check_arg(bias.val().size() == vk.shape[0], "conv2d: bias size mismatch");
  Tensor<S> out;
  conv2d_forward(vx, vk, has_bias ? bias.val().ptr() : nullptr, out);
  bool ng = t.needs_grad(x.id) || t.needs_grad(kernel.id) || (has_bias && t.needs_grad(bias.id));
  typename Tape<S>::BackFn back;
  if (ng) {
    int32_t ib = has_bias ? bias.id : -1;
    back = [ix = x.id, ik = kernel.id, ib](Tape<S>& tp, const Tensor<S>& g) {
      const Tensor<S>& in = tp.val(ix);
      const Tensor<S>& k = tp.val(ik);
      Tensor<S>* gin = tp.needs_grad(ix) ? &tp.grad_buf(ix) : nullptr;
      Tensor<S>* gk = tp.needs_grad(ik) ? &tp.grad_buf(ik) : nullptr;
      Tensor<S>* gb = (ib >= 0 && tp.needs_grad(ib)) ? &tp.grad_buf(ib) : nullptr;
      conv2d_backward(in, k, g, gin, gk, gb);
    };
  }
  return t.push(std::move(out), ng, std::move(back));
}

template <class S>
Var<S> avg_pool2(Var<S> x) {
  Tape<S>& t = *x.tape;
  const Tensor<S>& vx = x.val();
  check_arg(vx.rank() == 3, "avg_pool2: [C,H,W] required");
  Tensor<S> out = avg_pool2_forward(vx);
  bool ng = t.needs_grad(x.id);
  typename Tape<S>::BackFn back;
  if (ng) {
    auto sh = vx.shape;
    back = [ix = x.id, sh](Tape<S>& tp, const Tensor<S>& g) {
      avg_pool2_backward(g, sh[0], sh[1], sh[2], tp.grad_buf(ix));
    };
  }
  return t.push(std::move(out), ng, std::move(back));
}

template <class S>
Var<S> resize_nearest(Var<S> x, Index h2, Index w2) {
  Tape<S>& t = *x.tape;
  const Tensor<S>& vx = x.val();
  check_arg(vx.rank() == 3, "resize_nearest: [C,H,W] required");
  Tensor<S> out = resize_nearest_forward(vx, h2, w2);
  bool ng = t.needs_grad(x.id);
  typename Tape<S>::BackFn back;
  if (ng) {
    auto sh = vx.shape;
    back = [ix = x.id, sh](Tape<S>& tp, const Tensor<S>& g) {
      resize_nearest_backward(g, sh[0], sh[1], sh[2], tp.grad_buf(ix));
    };
  }
  return t.push(std::move(out), ng, std::move(back));
}

template <class S>
Var<S> upsample_nearest2(Var<S> x) {
  const Tensor<S>& vx = x.val();
  return resize_nearest(x, vx.shape[1] * 2, vx.shape[2] * 2);
}

// ---- gather / scatter ----

// out[p,:] = table[idx[p],:], with idx < 0 producing a zero row (masked).
template <class S>
Var<S> gather_rows(Var<S> table, std::vector<int32_t> idx) {
  Tape<S>& t = *table.tape;
  const Tensor<S>& vt = table.val();
  check_arg(vt.rank() == 2, "gather_rows: table must be rank-2");
  const Index m = vt.shape[0], c = vt.shape[1];
  const Index p = static_cast<Index>(idx.size());
  Tensor<S> out(Shape{p, c});
  for (Index i = 0; i < p; ++i) {
    const int32_t r = idx[i];
    if (r < 0) continue;
    check_arg(r < m, "gather_rows: index out of range");
    out.data.segment(i * c, c) = vt.data.segment(static_cast<Index>(r) * c, c);
  }
  bool ng = t.needs_grad(table.id);
  typename Tape<S>::BackFn back;
  if (ng) {
    auto shared = std::make_shared<std::vector<int32_t>>(std::move(idx));
    back = [it = table.id, shared, c](Tape<S>& tp, const Tensor<S>& g) {
      Tensor<S>& gt = tp.grad_buf(it);
      const auto& ix = *shared;
      for (size_t i = 0; i < ix.size(); ++i) {
        if (ix[i] < 0) continue;
        gt.data.segment(static_cast<Index>(ix[i]) * c, c) +=
            g.data.segment(static_cast<Index>(i) * c, c);
      }
    };
  }
  return t.push(std::move(out), ng, std::move(back));
}

// out[p,:] = sum_g w[p,g] * table[idx[p,g],:]. Used for interpolated table
// lookups; weights are treated as constants.
template <class S>
Var<S> weighted_gather(Var<S> table, std::vector<int32_t> idx, std::vector<S> w, Index groups) {
  Tape<S>& t = *table.tape;
  const Tensor<S>& vt = table.val();
  check_arg(vt.rank() == 2, "weighted_gather: table must be rank-2");
  check_arg(idx.size() == w.size() && idx.size() % static_cast<size_t>(groups) == 0,
            "weighted_gather: index/weight size mismatch");
  const Index m = vt.shape[0], f = vt.shape[1];
  const Index p = static_cast<Index>(idx.size()) / groups;
  Tensor<S> out(Shape{p, f});
  for (Index i = 0; i < p; ++i) {
    auto row = out.data.segment(i * f, f);
    for (Index g = 0; g < groups; ++g) {
      const int32_t r = idx[i * groups + g];
      check_arg(r >= 0 && r < m, "weighted_gather: index out of range");
      row += vt.data.segment(static_cast<Index>(r) * f, f) * w[i * groups + g];
    }
  }
  bool ng = t.needs_grad(table.id);
  typename Tape<S>::BackFn back;
  if (ng) {
    auto sidx = std::make_shared<std::vector<int32_t>>(std::move(idx));
    auto sw = std::make_shared<std::vector<S>>(std::move(w));
    back = [it = table.id, sidx, sw, groups, f](Tape<S>& tp, const Tensor<S>& g) {
      Tensor<S>& gt = tp.grad_buf(it);
      const auto& ix = *sidx;
      const auto& wt = *sw;
      const Index p2 = static_cast<Index>(ix.size()) / groups;
      for (Index i = 0; i < p2; ++i) {
        auto grow = g.data.segment(i * f, f);
        for (Index k = 0; k < groups; ++k) {
          gt.data.segment(static_cast<Index>(ix[i * groups + k]) * f, f) +=
              grow * wt[i * groups + k];
        }
      }
    };
  }
  return t.push(std::move(out), ng, std::move(back));
}

}  // namespace dgnr
