// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "t2i/core/rng.hpp"
#include "t2i/core/tensor.hpp"

namespace t2i::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  void zero_grad() { grad.fill(0.0); }
};

// Named parameter container. std::map keeps iteration order sorted by name,
// which checkpointing and the optimizer rely on for determinism.
class ParamStore {
public:
  Parameter& create(const std::string& name, std::vector<int> shape) {
    if (params_.count(name)) throw std::runtime_error("parameter already exists: " + name);
    Parameter& p = params_[name];
    p.name = name;
    p.value = Tensor(shape);
    p.grad = Tensor(shape);
    return p;
  }

  Parameter& get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::runtime_error("no such parameter: " + name);
    return it->second;
  }

  const Parameter* find(const std::string& name) const {
    auto it = params_.find(name);
    return it == params_.end() ? nullptr : &it->second;
  }

  bool has(const std::string& name) const { return params_.count(name) > 0; }

  std::vector<Parameter*> all() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& [k, v] : params_) out.push_back(&v);
    return out;
  }

  std::vector<Parameter*> with_prefix(const std::string& prefix) {
    std::vector<Parameter*> out;
    for (auto& [k, v] : params_)
      if (k.rfind(prefix, 0) == 0) out.push_back(&v);
    return out;
  }

  void zero_grads() {
    for (auto& [k, v] : params_) v.zero_grad();
  }

  size_t count() const { return params_.size(); }

  int64_t total_size() const {
    int64_t n = 0;
    for (auto& [k, v] : params_) n += v.value.size();
    return n;
  }

private:
  std::map<std::string, Parameter> params_;
};

inline void init_gaussian(Parameter& p, Rng& rng, double std) {
  for (int64_t i = 0; i < p.value.size(); ++i) p.value[i] = std * rng.gaussian();
}

// std = 1/sqrt(fan_in); fan_in inferred from the trailing dims
// (matrix {out,in}: in; conv filter {O,C,K,K}: C*K*K).
inline void init_fanin(Parameter& p, Rng& rng) {
  int64_t fan_in = 1;
  const auto& s = p.value.shape();
  for (size_t i = 1; i < s.size(); ++i) fan_in *= s[i];
  if (fan_in < 1) fan_in = 1;
  const double std = 1.0 / std::sqrt(static_cast<double>(fan_in));
  init_gaussian(p, rng, std);
}

}  // namespace t2i::nn
