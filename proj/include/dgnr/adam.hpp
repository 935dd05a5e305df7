// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dgnr/parameter.hpp"

namespace dgnr {

template <class S>
struct AdamState {
  Tensor<S> first_moment;
  Tensor<S> second_moment;
  int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(const Shape& shape, double lr_ = 1e-3)
      : first_moment(shape), second_moment(shape), lr(lr_) {}
};

// One Adam update with bias correction. Reads param.grad, writes param.value.
template <class S>
void adam_step(Parameter<S>& p, AdamState<S>& st) {
  if (st.eps <= 0.0) throw std::invalid_argument("adam_step: eps must be positive");
  if (st.step == std::numeric_limits<int64_t>::max())
    throw std::overflow_error("adam_step: step count overflow");
  if (st.first_moment.size() != p.size()) {
    st.first_moment = Tensor<S>(p.value.shape);
    st.second_moment = Tensor<S>(p.value.shape);
  }
  st.step += 1;
  const S b1 = static_cast<S>(st.beta1), b2 = static_cast<S>(st.beta2);
  st.first_moment.data = b1 * st.first_moment.data + (S(1) - b1) * p.grad.data;
  st.second_moment.data = b2 * st.second_moment.data + (S(1) - b2) * p.grad.data.square();
  const S c1 = S(1) - static_cast<S>(std::pow(st.beta1, static_cast<double>(st.step)));
  const S c2 = S(1) - static_cast<S>(std::pow(st.beta2, static_cast<double>(st.step)));
  const S lr = static_cast<S>(st.lr);
  const S eps = static_cast<S>(st.eps);
  p.value.data -= lr * (st.first_moment.data / c1) /
                  ((st.second_moment.data / c2).sqrt() + eps);
}

// Exponential decay from lr0 to lr_end over total_steps (then held at lr_end).
inline double exp_decay_lr(double lr0, double lr_end, int64_t step, int64_t total_steps) {
  if (total_steps <= 0) return lr0;
  double f = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  return lr0 * std::pow(lr_end / lr0, f);
}

// Optimizer over a parameter set with the shared decay schedule.
template <class S>
class Adam {
 public:
  Adam(ParamSet<S> params, double lr0, double lr_end, int64_t total_steps)
      : params_(std::move(params)), lr0_(lr0), lr_end_(lr_end), total_steps_(total_steps) {
    for (auto* p : params_.items) states_.emplace_back(p->value.shape, lr0);
  }

  void zero_grad() { params_.zero_grad(); }

  void step() {
    const double lr = exp_decay_lr(lr0_, lr_end_, step_, total_steps_);
    for (size_t i = 0; i < params_.items.size(); ++i) {
      states_[i].lr = lr;
      adam_step(*params_.items[i], states_[i]);
    }
    ++step_;
  }

  int64_t current_step() const { return step_; }
  double current_lr() const { return exp_decay_lr(lr0_, lr_end_, step_, total_steps_); }
  const ParamSet<S>& params() const { return params_; }

 private:
  ParamSet<S> params_;
  std::vector<AdamState<S>> states_;
  double lr0_;
  double lr_end_;
  int64_t total_steps_;
  int64_t step_ = 0;
};

}  // namespace dgnr
