// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "t2i/nn/params.hpp"
#include "t2i/nn/tape.hpp"

namespace t2i::nn {

// y = W x + b
struct Affine {
  Parameter* W = nullptr;
  Parameter* b = nullptr;
  int in = 0, out = 0;

  Affine() = default;
  Affine(ParamStore& store, const std::string& name, int in_dim, int out_dim, Rng& rng)
      : in(in_dim), out(out_dim) {
    W = &store.create(name + ".W", {out_dim, in_dim});
    b = &store.create(name + ".b", {out_dim});
    init_fanin(*W, rng);
  }

  Var apply(Tape& t, Var x) const { return t.add(t.matvec(t.param(*W), x), t.param(*b)); }

  // X is (in, T); bias broadcast over columns.
  Var apply_cols(Tape& t, Var X) const {
    return t.add_col_broadcast(t.matmul(t.param(*W), X), t.param(*b));
  }
};

struct Conv2d {
  Parameter* W = nullptr;
  Parameter* b = nullptr;
  int in_ch = 0, out_ch = 0, k = 1, stride = 1, pad = 0;

  Conv2d() = default;
  Conv2d(ParamStore& store, const std::string& name, int in_channels, int out_channels,
         int kernel, int stride_, int pad_, Rng& rng)
      : in_ch(in_channels), out_ch(out_channels), k(kernel), stride(stride_), pad(pad_) {
    W = &store.create(name + ".W", {out_channels, in_channels, kernel, kernel});
    b = &store.create(name + ".b", {out_channels});
    init_fanin(*W, rng);
  }

  Var apply(Tape& t, Var x) const { return t.conv2d(x, t.param(*W), t.param(*b), stride, pad); }
};

// Single LSTM cell with combined gate weights, gate order [i, f, g, o].
// Forget-gate bias starts at 1.
struct LSTMCell {
  Parameter* W_ih = nullptr;
  Parameter* b_ih = nullptr;
  Parameter* W_hh = nullptr;
  Parameter* b_hh = nullptr;
  int input_dim = 0, hidden = 0;

  LSTMCell() = default;
  LSTMCell(ParamStore& store, const std::string& name, int input_dim_, int hidden_, Rng& rng)
      : input_dim(input_dim_), hidden(hidden_) {
    W_ih = &store.create(name + ".W_ih", {4 * hidden_, input_dim_});
    b_ih = &store.create(name + ".b_ih", {4 * hidden_});
    W_hh = &store.create(name + ".W_hh", {4 * hidden_, hidden_});
    b_hh = &store.create(name + ".b_hh", {4 * hidden_});
    init_fanin(*W_ih, rng);
    init_fanin(*W_hh, rng);
    for (int i = hidden_; i < 2 * hidden_; ++i) b_ih->value[i] = 1.0;
  }

  struct State {
    Var h, c;
  };

  State initial(Tape& t) const {
    return {t.constant(Tensor({hidden})), t.constant(Tensor({hidden}))};
  }

  State step(Tape& t, Var x, const State& prev) const {
    Var z = t.add(t.add(t.matvec(t.param(*W_ih), x), t.param(*b_ih)),
                  t.add(t.matvec(t.param(*W_hh), prev.h), t.param(*b_hh)));
    Var i = t.sigmoid(t.slice(z, 0, hidden));
    Var f = t.sigmoid(t.slice(z, hidden, hidden));
    Var g = t.tanh_(t.slice(z, 2 * hidden, hidden));
    Var o = t.sigmoid(t.slice(z, 3 * hidden, hidden));
    Var c = t.add(t.mul(f, prev.c), t.mul(i, g));
    Var h = t.mul(o, t.tanh_(c));
    return {h, c};
  }
};

}  // namespace t2i::nn
