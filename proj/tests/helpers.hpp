// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "t2i/nn/params.hpp"
#include "t2i/nn/tape.hpp"

namespace t2i::testing {

// Central finite-difference gradient check. `build` must construct the full
// forward graph on the given tape (reading parameter values as of call time)
// and return the scalar loss. Returns the max relative error over sampled
// coordinates of the named parameters.
inline double check_gradients(const std::function<nn::Var(nn::Tape&)>& build,
                              nn::ParamStore& store,
                              const std::vector<std::string>& param_names,
                              int coords_per_param, Rng& rng, double h = 1e-5) {
  store.zero_grads();
  double f0;
  {
    nn::Tape t;
    nn::Var loss = build(t);
    f0 = t.value(loss)[0];
    t.backward(loss);
  }
  // Central differencing cannot resolve gradients below the cancellation
  // noise of f(x+h) - f(x-h); such coordinates are judged against the noise
  // scale instead of their own magnitude.
  const double fd_noise = 1e4 * 2.220446049250313e-16 * std::max(1.0, std::abs(f0)) / h;

  double max_rel = 0.0;
  for (const auto& name : param_names) {
    nn::Parameter& p = store.get(name);
    const int64_t n = p.value.size();
    for (int s = 0; s < coords_per_param; ++s) {
      const int64_t idx =
          n == 1 ? 0 : static_cast<int64_t>(rng.uniform_int(0, static_cast<int>(n) - 1));
      const double analytic = p.grad[idx];
      const double orig = p.value[idx];
      p.value[idx] = orig + h;
      double fp;
      {
        nn::Tape t(false);
        fp = t.value(build(t))[0];
      }
      p.value[idx] = orig - h;
      double fm;
      {
        nn::Tape t(false);
        fm = t.value(build(t))[0];
      }
      p.value[idx] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      const double denom = std::max(fd_noise, std::abs(fd) + std::abs(analytic));
      const double rel = std::abs(fd - analytic) / denom;
      if (rel > max_rel) max_rel = rel;
    }
  }
  return max_rel;
}

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = scale * rng.gaussian();
  return t;
}

}  // namespace t2i::testing
