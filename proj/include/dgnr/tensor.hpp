// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Dense n-d array on a flat Eigen buffer, row-major across dimensions.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgnr/rng.hpp"

namespace dgnr {

using Index = std::int64_t;
using Shape = std::vector<Index>;

inline void check_arg(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline Index shape_size(const Shape& s) {
  Index n = 1;
  for (Index d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

template <class S>
using MatMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class S>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class S>
using VecMap = Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>>;
template <class S>
using ConstVecMap = Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>>;

template <class S>
struct Tensor {
  Shape shape;
  Eigen::Array<S, Eigen::Dynamic, 1> data;

  Tensor() = default;
  explicit Tensor(Shape sh) : shape(std::move(sh)) { data.setZero(shape_size(shape)); }
  Tensor(Shape sh, S fill) : shape(std::move(sh)) { data.setConstant(shape_size(shape), fill); }

  static Tensor zeros(Shape sh) { return Tensor(std::move(sh)); }
  static Tensor full(Shape sh, S v) { return Tensor(std::move(sh), v); }
  static Tensor scalar(S v) { return Tensor(Shape{1}, v); }

  static Tensor from(Shape sh, std::initializer_list<S> vals) {
    Tensor t(std::move(sh));
    if (static_cast<Index>(vals.size()) != t.size())
      throw std::invalid_argument("Tensor::from: value count does not match shape");
    Index i = 0;
    for (S v : vals) t.data[i++] = v;
    return t;
  }

  static Tensor uniform(Shape sh, Rng& rng, S lo, S hi) {
    Tensor t(std::move(sh));
    for (Index i = 0; i < t.size(); ++i) t.data[i] = static_cast<S>(rng.uniform(lo, hi));
    return t;
  }

  static Tensor normal(Shape sh, Rng& rng, S stddev) {
    Tensor t(std::move(sh));
    for (Index i = 0; i < t.size(); ++i) t.data[i] = static_cast<S>(rng.normal() * stddev);
    return t;
  }

  Index size() const { return data.size(); }
  Index rank() const { return static_cast<Index>(shape.size()); }
  Index dim(Index i) const { return shape[static_cast<size_t>(i)]; }

  S* ptr() { return data.data(); }
  const S* ptr() const { return data.data(); }

  S& operator[](Index i) { return data[i]; }
  const S& operator[](Index i) const { return data[i]; }

  bool is_scalar() const { return size() == 1; }
  S value() const {
    if (!is_scalar()) throw std::logic_error("Tensor::value: not a scalar");
    return data[0];
  }

  bool all_finite() const { return data.isFinite().all(); }

  // 2-d matrix view of the flat buffer (row-major).
  MatMap<S> mat(Index rows, Index cols) { return MatMap<S>(data.data(), rows, cols); }
  ConstMatMap<S> mat(Index rows, Index cols) const {
    return ConstMatMap<S>(data.data(), rows, cols);
  }
  // Natural matrix view for rank-2 tensors.
  MatMap<S> mat() { return mat(shape[0], shape[1]); }
  ConstMatMap<S> mat() const { return mat(shape[0], shape[1]); }

  template <class T>
  Tensor<T> cast() const {
    Tensor<T> out;
    out.shape = shape;
    out.data = data.template cast<T>();
    return out;
  }
};

template <class S>
inline void check_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* what) {
  if (a.shape != b.shape)
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(a.shape) +
                                " vs " + shape_str(b.shape));
}

}  // namespace dgnr
