// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "t2i/core/tensor.hpp"
#include "t2i/nn/params.hpp"

namespace t2i::nn {

class Tape;

// Lightweight handle into a tape node.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
};

// Eager reverse-mode autodiff. Every op computes its value immediately and
// records a closure that routes gradients to its inputs; backward() walks the
// nodes in reverse creation order (a topological order by construction).
//
// Construct with grad_enabled=false for inference passes: parameters become
// constants and no gradient buffers are allocated.
class Tape {
public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // --- leaves ---
  Var constant(Tensor v);
  Var input(Tensor v);       // differentiable non-parameter leaf
  Var param(Parameter& p);   // memoized: one node per Parameter per tape

  // --- elementwise ---
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var scale(Var a, double k);
  Var add_const(Var a, double k);
  Var neg(Var a) { return scale(a, -1.0); }
  Var sigmoid(Var a);
  Var tanh_(Var a);
  Var relu(Var a);
  Var lrelu(Var a, double slope);
  Var exp_(Var a);
  Var log_(Var a);
  Var sqrt_(Var a);
  Var square(Var a) { return mul(a, a); }
  Var clamp(Var a, double lo, double hi);

  // --- reductions and shaping ---
  Var sum(Var a);
  Var mean(Var a);
  Var dot(Var a, Var b);
  Var reshape(Var a, std::vector<int> shape);
  Var slice(Var a, int offset, int len);            // flat
  Var concat(const std::vector<Var>& parts);        // flat, rank-1 result
  Var concat_channels(Var a, Var b);                // CHW along C
  Var pick(Var a, int i, int j);                    // scalar from a matrix
  Var stack_scalars(const std::vector<Var>& cells, int rows, int cols);
  Var col(Var a, int j);                            // column j of a matrix
  Var stack_cols(const std::vector<Var>& cols);     // vectors -> (rows, T)

  // --- linear algebra ---
  Var matmul(Var a, Var b);      // (m,k)x(k,n)
  Var matmul_tn(Var a, Var b);   // a:(k,m) -> a^T b
  Var matmul_nt(Var a, Var b);   // b:(n,k) -> a b^T
  Var matvec(Var a, Var x);
  Var add_col_broadcast(Var m, Var b);  // add vector b to every column of m

  // --- nn building blocks ---
  Var embed_cols(Var table, const std::vector<int>& ids);  // table (V,D) -> (D,T)
  // Softmax along one axis of a matrix. axis=0: down each column (over rows);
  // axis=1: across each row (over columns). mask, when given, spans the
  // softmax axis; masked entries come out exactly 0.
  Var softmax_axis(Var m, int axis, const std::vector<uint8_t>* mask);
  Var softmax_vec(Var x, const std::vector<uint8_t>* mask = nullptr);
  Var masked_lse(Var x, const std::vector<uint8_t>* mask);  // log-sum-exp, scalar
  Var conv2d(Var x, Var w, Var b, int stride, int pad);
  Var upsample2x(Var x);
  Var broadcast_hw(Var v, int H, int W);  // (C) -> (C,H,W)
  Var mean_hw(Var x);                     // (C,H,W) -> (C)

  // --- autodiff ---
  void backward(Var loss);  // loss must be a scalar; accumulates into Parameter::grad
  const Tensor& value(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }
  const Tensor& grad(Var v) const { return nodes_[static_cast<size_t>(v.id)].grad; }
  bool grad_enabled() const { return grad_enabled_; }
  size_t node_count() const { return nodes_.size(); }

private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    Parameter* bound_param = nullptr;
    std::function<void()> backward;
  };

  Var make(Tensor value, bool needs_grad, std::function<void()> bw);
  bool needs(Var v) const { return nodes_[static_cast<size_t>(v.id)].needs_grad; }
  Tensor& grad_mut(Var v) { return nodes_[static_cast<size_t>(v.id)].grad; }
  void check(Var v) const;

  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, int> param_nodes_;
  bool grad_enabled_;
};

inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }

// cosine(a, b) = <a,b> / (|a||b|), composed from differentiable primitives.
Var cosine(Tape& t, Var a, Var b);

}  // namespace t2i::nn
