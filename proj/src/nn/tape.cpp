// SPDX-License-Identifier: Apache-2.0
#include "t2i/nn/tape.hpp"

#include <cmath>

#include "t2i/core/kernels.hpp"

namespace t2i::nn {

void Tape::check(Var v) const {
  if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::runtime_error("tape: var does not belong to this tape");
}

Var Tape::make(Tensor value, bool needs_grad, std::function<void()> bw) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = grad_enabled_ && needs_grad;
  if (n.needs_grad) {
    n.grad = Tensor(n.value.shape());
    n.backward = std::move(bw);
  }
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor v) { return make(std::move(v), false, nullptr); }

Var Tape::input(Tensor v) { return make(std::move(v), true, nullptr); }

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{this, it->second};
  Var v = make(p.value, grad_enabled_, nullptr);
  nodes_[static_cast<size_t>(v.id)].bound_param = grad_enabled_ ? &p : nullptr;
  param_nodes_[&p] = v.id;
  return v;
}

namespace {
void axpy(const Tensor& src, Tensor& dst) {
  for (int64_t i = 0; i < src.size(); ++i) dst[i] += src[i];
}
}  // namespace

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Var Tape::add(Var a, Var b) {
  check(a); check(b);
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb))
    throw std::runtime_error("add: shape mismatch " + shape_str(va) + " vs " + shape_str(vb));
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  Var o = make(std::move(out), needs(a) || needs(b), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, b, o] {
      const Tensor& g = grad(o);
      if (needs(a)) axpy(g, grad_mut(a));
      if (needs(b)) axpy(g, grad_mut(b));
    };
  return o;
}

Var Tape::sub(Var a, Var b) {
  check(a); check(b);
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) throw std::runtime_error("sub: shape mismatch");
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
  Var o = make(std::move(out), needs(a) || needs(b), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, b, o] {
      const Tensor& g = grad(o);
      if (needs(a)) axpy(g, grad_mut(a));
      if (needs(b)) {
        Tensor& gb = grad_mut(b);
        for (int64_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    };
  return o;
}

Var Tape::mul(Var a, Var b) {
  check(a); check(b);
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) throw std::runtime_error("mul: shape mismatch");
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  Var o = make(std::move(out), needs(a) || needs(b), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, b, o] {
      const Tensor& g = grad(o);
      const Tensor& va = value(a);
      const Tensor& vb = value(b);
      if (needs(a)) {
        Tensor& ga = grad_mut(a);
        for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
      }
      if (needs(b)) {
        Tensor& gb = grad_mut(b);
        for (int64_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
      }
    };
  return o;
}

Var Tape::div(Var a, Var b) {
  check(a); check(b);
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) throw std::runtime_error("div: shape mismatch");
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = va[i] / vb[i];
  Var o = make(std::move(out), needs(a) || needs(b), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, b, o] {
      const Tensor& g = grad(o);
      const Tensor& va = value(a);
      const Tensor& vb = value(b);
      if (needs(a)) {
        Tensor& ga = grad_mut(a);
        for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] / vb[i];
      }
      if (needs(b)) {
        Tensor& gb = grad_mut(b);
        for (int64_t i = 0; i < g.size(); ++i) gb[i] -= g[i] * va[i] / (vb[i] * vb[i]);
      }
    };
  return o;
}

Var Tape::scale(Var a, double k) {
  check(a);
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = k * va[i];
  Var o = make(std::move(out), needs(a), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, o, k] {
      const Tensor& g = grad(o);
      Tensor& ga = grad_mut(a);
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += k * g[i];
    };
  return o;
}

Var Tape::add_const(Var a, double k) {
  check(a);
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = va[i] + k;
  Var o = make(std::move(out), needs(a), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, o] { axpy(grad(o), grad_mut(a)); };
  return o;
}

namespace {
template <typename F, typename DF>
Tensor map_unary(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}
}  // namespace

Var Tape::sigmoid(Var a) {
  check(a);
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-va[i]));
  Var o = make(std::move(out), needs(a), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, o] {
      const Tensor& g = grad(o);
      const Tensor& y = value(o);
      Tensor& ga = grad_mut(a);
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    };
  return o;
}

Var Tape::tanh_(Var a) {
  check(a);
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::tanh(va[i]);
  Var o = make(std::move(out), needs(a), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, o] {
      const Tensor& g = grad(o);
      const Tensor& y = value(o);
      Tensor& ga = grad_mut(a);
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    };
  return o;
}

Var Tape::relu(Var a) { return lrelu(a, 0.0); }

Var Tape::lrelu(Var a, double slope) {
  check(a);
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = va[i] > 0.0 ? va[i] : slope * va[i];
  Var o = make(std::move(out), needs(a), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, o, slope] {
      const Tensor& g = grad(o);
      const Tensor& x = value(a);
      Tensor& ga = grad_mut(a);
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (x[i] > 0.0 ? 1.0 : slope);
    };
  return o;
}

Var Tape::exp_(Var a) {
  check(a);
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::exp(va[i]);
  Var o = make(std::move(out), needs(a), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, o] {
      const Tensor& g = grad(o);
      const Tensor& y = value(o);
      Tensor& ga = grad_mut(a);
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    };
  return o;
}

Var Tape::log_(Var a) {
  check(a);
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::log(va[i]);
  Var o = make(std::move(out), needs(a), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, o] {
      const Tensor& g = grad(o);
      const Tensor& x = value(a);
      Tensor& ga = grad_mut(a);
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
    };
  return o;
}

Var Tape::sqrt_(Var a) {
  check(a);
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(va[i]);
  Var o = make(std::move(out), needs(a), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, o] {
      const Tensor& g = grad(o);
      const Tensor& y = value(o);
      Tensor& ga = grad_mut(a);
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * 0.5 / y[i];
    };
  return o;
}

Var Tape::clamp(Var a, double lo, double hi) {
  check(a);
  const Tensor& va = value(a);
  Tensor out(va.shape());
  for (int64_t i = 0; i < out.size(); ++i)
    out[i] = va[i] < lo ? lo : (va[i] > hi ? hi : va[i]);
  Var o = make(std::move(out), needs(a), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, o, lo, hi] {
      const Tensor& g = grad(o);
      const Tensor& x = value(a);
      Tensor& ga = grad_mut(a);
      for (int64_t i = 0; i < g.size(); ++i)
        if (x[i] > lo && x[i] < hi) ga[i] += g[i];
    };
  return o;
}

// ---------------------------------------------------------------------------
// reductions and shaping
// ---------------------------------------------------------------------------

Var Tape::sum(Var a) {
  check(a);
  const Tensor& va = value(a);
  double s = 0.0;
  for (int64_t i = 0; i < va.size(); ++i) s += va[i];
  Var o = make(Tensor::scalar(s), needs(a), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, o] {
      const double g = grad(o)[0];
      Tensor& ga = grad_mut(a);
      for (int64_t i = 0; i < ga.size(); ++i) ga[i] += g;
    };
  return o;
}

Var Tape::mean(Var a) {
  check(a);
  return scale(sum(a), 1.0 / static_cast<double>(value(a).size()));
}

Var Tape::dot(Var a, Var b) {
  check(a); check(b);
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.size() != vb.size()) throw std::runtime_error("dot: size mismatch");
  double s = 0.0;
  for (int64_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
  Var o = make(Tensor::scalar(s), needs(a) || needs(b), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, b, o] {
      const double g = grad(o)[0];
      const Tensor& va = value(a);
      const Tensor& vb = value(b);
      if (needs(a)) {
        Tensor& ga = grad_mut(a);
        for (int64_t i = 0; i < ga.size(); ++i) ga[i] += g * vb[i];
      }
      if (needs(b)) {
        Tensor& gb = grad_mut(b);
        for (int64_t i = 0; i < gb.size(); ++i) gb[i] += g * va[i];
      }
    };
  return o;
}

Var Tape::reshape(Var a, std::vector<int> shape) {
  check(a);
  const Tensor& va = value(a);
  if (Tensor::count(shape) != va.size()) throw std::runtime_error("reshape: size mismatch");
  Tensor out(shape);
  for (int64_t i = 0; i < va.size(); ++i) out[i] = va[i];
  Var o = make(std::move(out), needs(a), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, o] { axpy(grad(o), grad_mut(a)); };
  return o;
}

Var Tape::slice(Var a, int offset, int len) {
  check(a);
  const Tensor& va = value(a);
  if (offset < 0 || offset + len > va.size()) throw std::runtime_error("slice: out of range");
  Tensor out({len});
  for (int i = 0; i < len; ++i) out[i] = va[offset + i];
  Var o = make(std::move(out), needs(a), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, o, offset, len] {
      const Tensor& g = grad(o);
      Tensor& ga = grad_mut(a);
      for (int i = 0; i < len; ++i) ga[offset + i] += g[i];
    };
  return o;
}

Var Tape::concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::runtime_error("concat: empty");
  int64_t total = 0;
  bool ng = false;
  for (Var p : parts) {
    check(p);
    total += value(p).size();
    ng = ng || needs(p);
  }
  Tensor out({static_cast<int>(total)});
  int64_t off = 0;
  for (Var p : parts) {
    const Tensor& v = value(p);
    for (int64_t i = 0; i < v.size(); ++i) out[off + i] = v[i];
    off += v.size();
  }
  Var o = make(std::move(out), ng, nullptr);
  if (nodes_[o.id].needs_grad) {
    std::vector<Var> ps = parts;
    nodes_[o.id].backward = [this, ps, o] {
      const Tensor& g = grad(o);
      int64_t off = 0;
      for (Var p : ps) {
        const int64_t n = value(p).size();
        if (needs(p)) {
          Tensor& gp = grad_mut(p);
          for (int64_t i = 0; i < n; ++i) gp[i] += g[off + i];
        }
        off += n;
      }
    };
  }
  return o;
}

Var Tape::concat_channels(Var a, Var b) {
  check(a); check(b);
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.rank() != 3 || vb.rank() != 3 || va.dim(1) != vb.dim(1) || va.dim(2) != vb.dim(2))
    throw std::runtime_error("concat_channels: incompatible shapes");
  Tensor out({va.dim(0) + vb.dim(0), va.dim(1), va.dim(2)});
  int64_t off = 0;
  for (int64_t i = 0; i < va.size(); ++i) out[off + i] = va[i];
  off += va.size();
  for (int64_t i = 0; i < vb.size(); ++i) out[off + i] = vb[i];
  Var o = make(std::move(out), needs(a) || needs(b), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, b, o] {
      const Tensor& g = grad(o);
      const int64_t na = value(a).size();
      if (needs(a)) {
        Tensor& ga = grad_mut(a);
        for (int64_t i = 0; i < na; ++i) ga[i] += g[i];
      }
      if (needs(b)) {
        Tensor& gb = grad_mut(b);
        for (int64_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
      }
    };
  return o;
}

Var Tape::pick(Var a, int i, int j) {
  check(a);
  const Tensor& va = value(a);
  if (va.rank() != 2) throw std::runtime_error("pick: matrix expected");
  Var o = make(Tensor::scalar(va.at(i, j)), needs(a), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, o, i, j] { grad_mut(a).at(i, j) += grad(o)[0]; };
  return o;
}

Var Tape::stack_scalars(const std::vector<Var>& cells, int rows, int cols) {
  if (static_cast<int>(cells.size()) != rows * cols)
    throw std::runtime_error("stack_scalars: cell count mismatch");
  Tensor out({rows, cols});
  bool ng = false;
  for (int i = 0; i < rows * cols; ++i) {
    check(cells[i]);
    if (value(cells[i]).size() != 1) throw std::runtime_error("stack_scalars: non-scalar cell");
    out[i] = value(cells[i])[0];
    ng = ng || needs(cells[i]);
  }
  Var o = make(std::move(out), ng, nullptr);
  if (nodes_[o.id].needs_grad) {
    std::vector<Var> cs = cells;
    nodes_[o.id].backward = [this, cs, o] {
      const Tensor& g = grad(o);
      for (size_t i = 0; i < cs.size(); ++i)
        if (needs(cs[i])) grad_mut(cs[i])[0] += g[static_cast<int64_t>(i)];
    };
  }
  return o;
}

Var Tape::col(Var a, int j) {
  check(a);
  const Tensor& va = value(a);
  if (va.rank() != 2) throw std::runtime_error("col: matrix expected");
  const int rows = va.dim(0);
  if (j < 0 || j >= va.dim(1)) throw std::runtime_error("col: index out of range");
  Tensor out({rows});
  for (int i = 0; i < rows; ++i) out[i] = va.at(i, j);
  Var o = make(std::move(out), needs(a), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, o, rows, j] {
      const Tensor& g = grad(o);
      Tensor& ga = grad_mut(a);
      for (int i = 0; i < rows; ++i) ga.at(i, j) += g[i];
    };
  return o;
}

Var Tape::stack_cols(const std::vector<Var>& cols) {
  if (cols.empty()) throw std::runtime_error("stack_cols: empty");
  check(cols[0]);
  const int rows = value(cols[0]).dim(0);
  const int T = static_cast<int>(cols.size());
  bool ng = false;
  Tensor out({rows, T});
  for (int j = 0; j < T; ++j) {
    check(cols[static_cast<size_t>(j)]);
    const Tensor& v = value(cols[static_cast<size_t>(j)]);
    if (v.rank() != 1 || v.dim(0) != rows) throw std::runtime_error("stack_cols: ragged columns");
    for (int i = 0; i < rows; ++i) out.at(i, j) = v[i];
    ng = ng || needs(cols[static_cast<size_t>(j)]);
  }
  Var o = make(std::move(out), ng, nullptr);
  if (nodes_[o.id].needs_grad) {
    std::vector<Var> cs = cols;
    nodes_[o.id].backward = [this, cs, o, rows] {
      const Tensor& g = grad(o);
      for (size_t j = 0; j < cs.size(); ++j) {
        if (!needs(cs[j])) continue;
        Tensor& gc = grad_mut(cs[j]);
        for (int i = 0; i < rows; ++i) gc[i] += g.at(i, static_cast<int>(j));
      }
    };
  }
  return o;
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
  check(a); check(b);
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.dim(1) != vb.dim(0))
    throw std::runtime_error("matmul: shape mismatch " + shape_str(va) + " x " + shape_str(vb));
  const int m = va.dim(0), k = va.dim(1), n = vb.dim(1);
  Tensor out({m, n});
  kernels::matmul_nn(va.data(), vb.data(), out.data(), m, k, n);
  Var o = make(std::move(out), needs(a) || needs(b), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, b, o, m, k, n] {
      const Tensor& g = grad(o);
      if (needs(a)) {
        Tensor da({m, k});
        kernels::matmul_nt(g.data(), value(b).data(), da.data(), m, n, k);
        axpy(da, grad_mut(a));
      }
      if (needs(b)) {
        Tensor db({k, n});
        kernels::matmul_tn(value(a).data(), g.data(), db.data(), k, m, n);
        axpy(db, grad_mut(b));
      }
    };
  return o;
}

Var Tape::matmul_tn(Var a, Var b) {
  check(a); check(b);
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.dim(0) != vb.dim(0))
    throw std::runtime_error("matmul_tn: shape mismatch");
  const int k = va.dim(0), m = va.dim(1), n = vb.dim(1);
  Tensor out({m, n});
  kernels::matmul_tn(va.data(), vb.data(), out.data(), m, k, n);
  Var o = make(std::move(out), needs(a) || needs(b), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, b, o, m, k, n] {
      const Tensor& g = grad(o);
      // out = a^T b; da = b g^T  (k,m); db = a g  (k,n)
      if (needs(a)) {
        Tensor da({k, m});
        kernels::matmul_nt(value(b).data(), g.data(), da.data(), k, n, m);
        axpy(da, grad_mut(a));
      }
      if (needs(b)) {
        Tensor db({k, n});
        kernels::matmul_nn(value(a).data(), g.data(), db.data(), k, m, n);
        axpy(db, grad_mut(b));
      }
    };
  return o;
}

Var Tape::matmul_nt(Var a, Var b) {
  check(a); check(b);
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.dim(1) != vb.dim(1))
    throw std::runtime_error("matmul_nt: shape mismatch");
  const int m = va.dim(0), k = va.dim(1), n = vb.dim(0);
  Tensor out({m, n});
  kernels::matmul_nt(va.data(), vb.data(), out.data(), m, k, n);
  Var o = make(std::move(out), needs(a) || needs(b), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, b, o, m, k, n] {
      const Tensor& g = grad(o);
      // out = a b^T; da = g b (m,k); db = g^T a (n,k)
      if (needs(a)) {
        Tensor da({m, k});
        kernels::matmul_nn(g.data(), value(b).data(), da.data(), m, n, k);
        axpy(da, grad_mut(a));
      }
      if (needs(b)) {
        Tensor db({n, k});
        kernels::matmul_tn(g.data(), value(a).data(), db.data(), n, m, k);
        axpy(db, grad_mut(b));
      }
    };
  return o;
}

Var Tape::matvec(Var a, Var x) {
  check(a); check(x);
  const Tensor& va = value(a);
  const Tensor& vx = value(x);
  if (va.rank() != 2 || vx.rank() != 1 || va.dim(1) != vx.dim(0))
    throw std::runtime_error("matvec: shape mismatch " + shape_str(va) + " x " + shape_str(vx));
  const int m = va.dim(0), k = va.dim(1);
  Tensor out({m});
  kernels::matmul_nn(va.data(), vx.data(), out.data(), m, k, 1);
  Var o = make(std::move(out), needs(a) || needs(x), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, a, x, o, m, k] {
      const Tensor& g = grad(o);
      if (needs(a)) {
        Tensor da({m, k});
        kernels::matmul_nt(g.data(), value(x).data(), da.data(), m, 1, k);
        axpy(da, grad_mut(a));
      }
      if (needs(x)) {
        Tensor dx({k});
        kernels::matmul_tn(value(a).data(), g.data(), dx.data(), k, m, 1);
        axpy(dx, grad_mut(x));
      }
    };
  return o;
}

Var Tape::add_col_broadcast(Var m, Var b) {
  check(m); check(b);
  const Tensor& vm = value(m);
  const Tensor& vb = value(b);
  if (vm.rank() != 2 || vb.rank() != 1 || vm.dim(0) != vb.dim(0))
    throw std::runtime_error("add_col_broadcast: shape mismatch");
  const int rows = vm.dim(0), cols = vm.dim(1);
  Tensor out({rows, cols});
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out.at(i, j) = vm.at(i, j) + vb[i];
  Var o = make(std::move(out), needs(m) || needs(b), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, m, b, o, rows, cols] {
      const Tensor& g = grad(o);
      if (needs(m)) axpy(g, grad_mut(m));
      if (needs(b)) {
        Tensor& gb = grad_mut(b);
        for (int i = 0; i < rows; ++i) {
          double s = 0.0;
          for (int j = 0; j < cols; ++j) s += g.at(i, j);
          gb[i] += s;
        }
      }
    };
  return o;
}

// ---------------------------------------------------------------------------
// nn building blocks
// ---------------------------------------------------------------------------

Var Tape::embed_cols(Var table, const std::vector<int>& ids) {
  check(table);
  const Tensor& vt = value(table);
  if (vt.rank() != 2) throw std::runtime_error("embed_cols: table must be (V,D)");
  const int V = vt.dim(0), D = vt.dim(1);
  const int T = static_cast<int>(ids.size());
  Tensor out({D, T});
  for (int t = 0; t < T; ++t) {
    const int id = ids[t];
    if (id < 0 || id >= V) throw std::runtime_error("embed_cols: id out of range");
    for (int d = 0; d < D; ++d) out.at(d, t) = vt.at(id, d);
  }
  Var o = make(std::move(out), needs(table), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, table, o, ids, D] {
      const Tensor& g = grad(o);
      Tensor& gt = grad_mut(table);
      for (size_t t = 0; t < ids.size(); ++t)
        for (int d = 0; d < D; ++d) gt.at(ids[t], d) += g.at(d, static_cast<int>(t));
    };
  return o;
}

Var Tape::softmax_axis(Var m, int axis, const std::vector<uint8_t>* mask) {
  check(m);
  const Tensor& vm = value(m);
  if (vm.rank() != 2) throw std::runtime_error("softmax_axis: matrix expected");
  const int rows = vm.dim(0), cols = vm.dim(1);
  const int axis_len = axis == 0 ? rows : cols;
  if (mask && static_cast<int>(mask->size()) != axis_len)
    throw std::runtime_error("softmax_axis: mask length mismatch");
  auto live = [&](int i) { return !mask || (*mask)[static_cast<size_t>(i)] != 0; };

  Tensor out({rows, cols});
  const int n_lines = axis == 0 ? cols : rows;
  for (int line = 0; line < n_lines; ++line) {
    auto elem = [&](int i) -> double {
      return axis == 0 ? vm.at(i, line) : vm.at(line, i);
    };
    double mx = -1e300;
    bool any = false;
    for (int i = 0; i < axis_len; ++i)
      if (live(i)) {
        any = true;
        if (elem(i) > mx) mx = elem(i);
      }
    if (!any) throw std::runtime_error("softmax_axis: all entries masked");
    double z = 0.0;
    for (int i = 0; i < axis_len; ++i)
      if (live(i)) z += std::exp(elem(i) - mx);
    for (int i = 0; i < axis_len; ++i) {
      const double y = live(i) ? std::exp(elem(i) - mx) / z : 0.0;
      if (axis == 0)
        out.at(i, line) = y;
      else
        out.at(line, i) = y;
    }
  }
  Var o = make(std::move(out), needs(m), nullptr);
  if (nodes_[o.id].needs_grad) {
    std::vector<uint8_t> mask_copy = mask ? *mask : std::vector<uint8_t>();
    const bool has_mask = mask != nullptr;
    nodes_[o.id].backward = [this, m, o, axis, rows, cols, axis_len, mask_copy, has_mask] {
      const Tensor& g = grad(o);
      const Tensor& y = value(o);
      Tensor& gm = grad_mut(m);
      auto live = [&](int i) { return !has_mask || mask_copy[static_cast<size_t>(i)] != 0; };
      const int n_lines = axis == 0 ? cols : rows;
      for (int line = 0; line < n_lines; ++line) {
        double dotgy = 0.0;
        for (int i = 0; i < axis_len; ++i) {
          const double yi = axis == 0 ? y.at(i, line) : y.at(line, i);
          const double gi = axis == 0 ? g.at(i, line) : g.at(line, i);
          dotgy += gi * yi;
        }
        for (int i = 0; i < axis_len; ++i) {
          if (!live(i)) continue;
          const double yi = axis == 0 ? y.at(i, line) : y.at(line, i);
          const double gi = axis == 0 ? g.at(i, line) : g.at(line, i);
          const double d = yi * (gi - dotgy);
          if (axis == 0)
            gm.at(i, line) += d;
          else
            gm.at(line, i) += d;
        }
      }
    };
  }
  return o;
}

Var Tape::softmax_vec(Var x, const std::vector<uint8_t>* mask) {
  check(x);
  if (value(x).rank() != 1) throw std::runtime_error("softmax_vec: vector expected");
  const int n = value(x).dim(0);  // node storage may move once new nodes are added
  Var m = reshape(x, {n, 1});
  Var s = softmax_axis(m, 0, mask);
  return reshape(s, {n});
}

Var Tape::masked_lse(Var x, const std::vector<uint8_t>* mask) {
  check(x);
  const Tensor& vx = value(x);
  if (vx.rank() != 1) throw std::runtime_error("masked_lse: vector expected");
  const int n = vx.dim(0);
  if (mask && static_cast<int>(mask->size()) != n)
    throw std::runtime_error("masked_lse: mask length mismatch");
  auto live = [&](int i) { return !mask || (*mask)[static_cast<size_t>(i)] != 0; };
  double mx = -1e300;
  bool any = false;
  for (int i = 0; i < n; ++i)
    if (live(i)) {
      any = true;
      if (vx[i] > mx) mx = vx[i];
    }
  if (!any) throw std::runtime_error("masked_lse: all entries masked");
  double z = 0.0;
  for (int i = 0; i < n; ++i)
    if (live(i)) z += std::exp(vx[i] - mx);
  const double out = mx + std::log(z);
  Var o = make(Tensor::scalar(out), needs(x), nullptr);
  if (nodes_[o.id].needs_grad) {
    std::vector<uint8_t> mask_copy = mask ? *mask : std::vector<uint8_t>();
    const bool has_mask = mask != nullptr;
    nodes_[o.id].backward = [this, x, o, n, mask_copy, has_mask] {
      const double g = grad(o)[0];
      const Tensor& vx = value(x);
      const double lse = value(o)[0];
      Tensor& gx = grad_mut(x);
      for (int i = 0; i < n; ++i) {
        if (has_mask && mask_copy[static_cast<size_t>(i)] == 0) continue;
        gx[i] += g * std::exp(vx[i] - lse);
      }
    };
  }
  return o;
}

Var Tape::conv2d(Var x, Var w, Var b, int stride, int pad) {
  check(x); check(w); check(b);
  const Tensor& vx = value(x);
  const Tensor& vw = value(w);
  const Tensor& vb = value(b);
  if (vx.rank() != 3 || vw.rank() != 4 || vb.rank() != 1)
    throw std::runtime_error("conv2d: bad ranks");
  const int C = vx.dim(0), H = vx.dim(1), W = vx.dim(2);
  const int O = vw.dim(0), K = vw.dim(2);
  if (vw.dim(1) != C || vw.dim(3) != K || vb.dim(0) != O)
    throw std::runtime_error("conv2d: shape mismatch " + shape_str(vx) + " w " + shape_str(vw));
  const int OH = kernels::conv_out_dim(H, K, stride, pad);
  const int OW = kernels::conv_out_dim(W, K, stride, pad);
  if (OH <= 0 || OW <= 0) throw std::runtime_error("conv2d: output collapses");
  Tensor out({O, OH, OW});
  kernels::conv2d_fwd(vx.data(), vw.data(), vb.data(), out.data(), C, H, W, O, K, stride, pad);
  Var o = make(std::move(out), needs(x) || needs(w) || needs(b), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, x, w, b, o, C, H, W, O, K, stride, pad] {
      const Tensor& g = grad(o);
      if (needs(x)) {
        Tensor dx({C, H, W});
        kernels::conv2d_bwd_input(g.data(), value(w).data(), dx.data(), C, H, W, O, K, stride, pad);
        axpy(dx, grad_mut(x));
      }
      if (needs(w) || needs(b)) {
        Tensor dw({O, C, K, K});
        Tensor db({O});
        kernels::conv2d_bwd_filter(g.data(), value(x).data(), dw.data(), db.data(), C, H, W, O, K,
                                   stride, pad);
        if (needs(w)) axpy(dw, grad_mut(w));
        if (needs(b)) axpy(db, grad_mut(b));
      }
    };
  return o;
}

Var Tape::upsample2x(Var x) {
  check(x);
  const Tensor& vx = value(x);
  if (vx.rank() != 3) throw std::runtime_error("upsample2x: CHW expected");
  const int C = vx.dim(0), H = vx.dim(1), W = vx.dim(2);
  Tensor out({C, 2 * H, 2 * W});
  kernels::upsample2x_fwd(vx.data(), out.data(), C, H, W);
  Var o = make(std::move(out), needs(x), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, x, o, C, H, W] {
      Tensor dx({C, H, W});
      kernels::upsample2x_bwd(grad(o).data(), dx.data(), C, H, W);
      axpy(dx, grad_mut(x));
    };
  return o;
}

Var Tape::broadcast_hw(Var v, int H, int W) {
  check(v);
  const Tensor& vv = value(v);
  if (vv.rank() != 1) throw std::runtime_error("broadcast_hw: vector expected");
  const int C = vv.dim(0);
  Tensor out({C, H, W});
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < H * W; ++i) out[static_cast<int64_t>(c) * H * W + i] = vv[c];
  Var o = make(std::move(out), needs(v), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, v, o, C, H, W] {
      const Tensor& g = grad(o);
      Tensor& gv = grad_mut(v);
      for (int c = 0; c < C; ++c) {
        double s = 0.0;
        for (int i = 0; i < H * W; ++i) s += g[static_cast<int64_t>(c) * H * W + i];
        gv[c] += s;
      }
    };
  return o;
}

Var Tape::mean_hw(Var x) {
  check(x);
  const Tensor& vx = value(x);
  if (vx.rank() != 3) throw std::runtime_error("mean_hw: CHW expected");
  const int C = vx.dim(0), H = vx.dim(1), W = vx.dim(2);
  const double inv = 1.0 / (static_cast<double>(H) * W);
  Tensor out({C});
  for (int c = 0; c < C; ++c) {
    double s = 0.0;
    for (int i = 0; i < H * W; ++i) s += vx[static_cast<int64_t>(c) * H * W + i];
    out[c] = s * inv;
  }
  Var o = make(std::move(out), needs(x), nullptr);
  if (nodes_[o.id].needs_grad)
    nodes_[o.id].backward = [this, x, o, C, H, W, inv] {
      const Tensor& g = grad(o);
      Tensor& gx = grad_mut(x);
      for (int c = 0; c < C; ++c)
        for (int i = 0; i < H * W; ++i) gx[static_cast<int64_t>(c) * H * W + i] += g[c] * inv;
    };
  return o;
}

// ---------------------------------------------------------------------------
// autodiff driver
// ---------------------------------------------------------------------------

void Tape::backward(Var loss) {
  check(loss);
  if (!grad_enabled_) throw std::runtime_error("backward on a grad-disabled tape");
  if (value(loss).size() != 1) throw std::runtime_error("backward: loss must be scalar");
  if (!needs(loss)) return;  // loss does not depend on any differentiable leaf
  grad_mut(loss)[0] += 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.needs_grad && n.backward) n.backward();
  }
  for (auto& [p, id] : param_nodes_) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.bound_param) axpy(n.grad, p->grad);
  }
}

Var cosine(Tape& t, Var a, Var b) {
  Var num = t.dot(a, b);
  Var den = t.sqrt_(t.mul(t.dot(a, a), t.dot(b, b)));
  return t.div(num, den);
}

}  // namespace t2i::nn
