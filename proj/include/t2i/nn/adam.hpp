// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "t2i/nn/params.hpp"

namespace t2i::nn {

// Adaptive-moment optimizer over a fixed parameter subset.
class Adam {
public:
  Adam(std::vector<Parameter*> params, double lr, double beta1, double beta2,
       double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (Parameter* p : params_) {
      state_[p] = {Tensor(p->value.shape()), Tensor(p->value.shape())};
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (Parameter* p : params_) {
      auto& [m, v] = state_[p];
      for (int64_t i = 0; i < p->value.size(); ++i) {
        const double g = p->grad[i];
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
        p->value[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
      }
    }
  }

  void zero_grads() {
    for (Parameter* p : params_) p->zero_grad();
  }

  const std::vector<Parameter*>& params() const { return params_; }
  double lr() const { return lr_; }

private:
  std::vector<Parameter*> params_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<Parameter*, std::pair<Tensor, Tensor>> state_;
};

}  // namespace t2i::nn
