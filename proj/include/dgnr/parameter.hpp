// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "dgnr/tensor.hpp"

namespace dgnr {

template <class S>
struct Parameter {
  std::string name;
  Tensor<S> value;
  Tensor<S> grad;
  bool requires_grad = true;

  Parameter() = default;
  Parameter(std::string n, Tensor<S> v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape) {}

  void zero_grad() { grad.data.setZero(); }
  Index size() const { return value.size(); }
};

// Non-owning list of the parameters a module exposes for optimization and
// checkpointing.
template <class S>
struct ParamSet {
  std::vector<Parameter<S>*> items;

  void add(Parameter<S>& p) { items.push_back(&p); }
  void add(const ParamSet& other) {
    items.insert(items.end(), other.items.begin(), other.items.end());
  }
  void zero_grad() {
    for (auto* p : items) p->zero_grad();
  }
  Index total_size() const {
    Index n = 0;
    for (auto* p : items) n += p->size();
    return n;
  }
};

}  // namespace dgnr
