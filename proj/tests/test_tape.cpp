// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "t2i/nn/layers.hpp"
#include "t2i/nn/tape.hpp"

using namespace t2i;
using nn::Tape;
using nn::Var;

TEST_CASE("elementwise and reduction gradients match finite differences") {
  Rng rng(1);
  nn::ParamStore store;
  auto& a = store.create("a", {6});
  auto& b = store.create("b", {6});
  nn::init_gaussian(a, rng, 1.0);
  nn::init_gaussian(b, rng, 1.0);
  for (int64_t i = 0; i < b.value.size(); ++i) b.value[i] = 0.5 + std::abs(b.value[i]);

  auto build = [&](Tape& t) {
    Var va = t.param(store.get("a"));
    Var vb = t.param(store.get("b"));
    Var e1 = t.mul(t.sigmoid(va), t.tanh_(vb));
    Var e2 = t.div(t.exp_(t.scale(va, 0.3)), t.add_const(t.sqrt_(vb), 1.0));
    Var e3 = t.log_(t.add_const(t.square(va), 1.0));
    return t.mean(t.add(t.add(e1, e2), e3));
  };
  Rng pick(2);
  const double err = testing::check_gradients(build, store, {"a", "b"}, 6, pick);
  CHECK(err < 1e-6);
}

TEST_CASE("matmul family gradients") {
  Rng rng(3);
  nn::ParamStore store;
  nn::init_gaussian(store.create("A", {4, 5}), rng, 1.0);
  nn::init_gaussian(store.create("B", {5, 3}), rng, 1.0);
  nn::init_gaussian(store.create("At", {5, 4}), rng, 1.0);
  nn::init_gaussian(store.create("Bt", {3, 5}), rng, 1.0);
  nn::init_gaussian(store.create("x", {5}), rng, 1.0);
  nn::init_gaussian(store.create("bias", {4}), rng, 1.0);

  auto build = [&](Tape& t) {
    Var A = t.param(store.get("A"));
    Var B = t.param(store.get("B"));
    Var At = t.param(store.get("At"));
    Var Bt = t.param(store.get("Bt"));
    Var x = t.param(store.get("x"));
    Var bias = t.param(store.get("bias"));
    Var m1 = t.matmul(A, B);
    Var m2 = t.matmul_tn(At, B);
    Var m3 = t.matmul_nt(A, Bt);
    Var v = t.add(t.matvec(A, x), bias);
    Var c = t.add_col_broadcast(m1, bias);
    return t.add(t.mean(t.add(t.add(m1, m2), m3)), t.add(t.mean(v), t.mean(c)));
  };
  Rng pick(4);
  const double err =
      testing::check_gradients(build, store, {"A", "B", "At", "Bt", "x", "bias"}, 6, pick);
  CHECK(err < 1e-6);
}

TEST_CASE("softmax, lse, pick, stack gradients") {
  Rng rng(5);
  nn::ParamStore store;
  nn::init_gaussian(store.create("S", {4, 3}), rng, 1.0);
  nn::init_gaussian(store.create("v", {5}), rng, 1.0);
  std::vector<uint8_t> rmask = {1, 1, 1, 0};
  std::vector<uint8_t> vmask = {1, 0, 1, 1, 1};

  auto build = [&](Tape& t) {
    Var S = t.param(store.get("S"));
    Var v = t.param(store.get("v"));
    Var s0 = t.softmax_axis(S, 0, &rmask);
    Var s1 = t.softmax_axis(S, 1, nullptr);
    Var l = t.masked_lse(v, &vmask);
    Var p = t.pick(s0, 1, 2);
    Var q = t.stack_scalars({l, p, t.dot(v, v), t.pick(s1, 0, 0)}, 2, 2);
    return t.add(t.mean(t.mul(s0, s0)), t.add(t.mean(q), t.mean(t.log_(t.add_const(s1, 0.1)))));
  };
  Rng pick(6);
  const double err = testing::check_gradients(build, store, {"S", "v"}, 10, pick);
  CHECK(err < 1e-6);
}

TEST_CASE("conv, upsample, broadcast, pooling gradients") {
  Rng rng(7);
  nn::ParamStore store;
  nn::init_gaussian(store.create("x", {3, 6, 6}), rng, 1.0);
  nn::init_gaussian(store.create("w", {4, 3, 3, 3}), rng, 0.3);
  nn::init_gaussian(store.create("cb", {4}), rng, 0.3);
  nn::init_gaussian(store.create("g", {4}), rng, 1.0);

  auto build = [&](Tape& t) {
    Var x = t.param(store.get("x"));
    Var w = t.param(store.get("w"));
    Var cb = t.param(store.get("cb"));
    Var g = t.param(store.get("g"));
    Var y = t.conv2d(x, w, cb, 1, 1);          // 4x6x6
    Var u = t.upsample2x(t.lrelu(y, 0.2));     // 4x12x12
    Var z = t.mul(u, t.broadcast_hw(g, 12, 12));
    Var m = t.mean_hw(z);
    return t.add(t.mean(m), t.mean(t.tanh_(y)));
  };
  Rng pick(8);
  const double err = testing::check_gradients(build, store, {"x", "w", "cb", "g"}, 8, pick);
  CHECK(err < 1e-5);
}

TEST_CASE("lstm cell gradient and embedding gather") {
  Rng rng(9);
  nn::ParamStore store;
  nn::LSTMCell cell(store, "cell", 4, 3, rng);
  nn::init_gaussian(store.create("table", {10, 4}), rng, 0.5);
  std::vector<int> ids = {2, 7, 2, 9};

  auto build = [&](Tape& t) {
    Var emb = t.embed_cols(t.param(store.get("table")), ids);  // 4 x 4
    auto st = cell.initial(t);
    Var acc = t.constant(Tensor::scalar(0.0));
    for (size_t i = 0; i < ids.size(); ++i) {
      std::vector<Var> comps;
      for (int d = 0; d < 4; ++d) comps.push_back(t.pick(emb, d, static_cast<int>(i)));
      Var xi = t.concat(comps);
      st = cell.step(t, xi, st);
      acc = t.add(acc, t.mean(st.h));
    }
    return acc;
  };
  Rng pick(10);
  const double err = testing::check_gradients(
      build, store, {"cell.W_ih", "cell.W_hh", "cell.b_ih", "cell.b_hh", "table"}, 8, pick);
  CHECK(err < 1e-6);
}

TEST_CASE("cosine composition: value and scale invariance") {
  Rng rng(11);
  Tape t;
  Tensor a = testing::random_tensor({6}, rng);
  Tensor b = testing::random_tensor({6}, rng);
  Var va = t.constant(a);
  Var vb = t.constant(b);
  Var c = nn::cosine(t, va, vb);
  double na = 0, nb = 0, d = 0;
  for (int i = 0; i < 6; ++i) {
    na += a[i] * a[i];
    nb += b[i] * b[i];
    d += a[i] * b[i];
  }
  CHECK(t.value(c)[0] == doctest::Approx(d / std::sqrt(na * nb)).epsilon(1e-12));

  Tensor a2 = a;
  for (int i = 0; i < 6; ++i) a2[i] *= 17.5;
  Var c2 = nn::cosine(t, t.constant(a2), vb);
  CHECK(t.value(c2)[0] == doctest::Approx(t.value(c)[0]).epsilon(1e-12));
}

TEST_CASE("grad-disabled tape treats params as constants") {
  Rng rng(12);
  nn::ParamStore store;
  nn::init_gaussian(store.create("p", {3}), rng, 1.0);
  Tape t(false);
  Var v = t.param(store.get("p"));
  Var s = t.sum(v);
  CHECK(t.value(s).size() == 1);
  CHECK_THROWS(t.backward(s));
}
