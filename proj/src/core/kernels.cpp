// SPDX-License-Identifier: Apache-2.0
#include "t2i/core/kernels.hpp"

#include <omp.h>

#include <atomic>

namespace t2i::kernels {

namespace {
std::atomic<bool> g_parallel{true};
}

void set_parallel(bool enabled) { g_parallel.store(enabled); }
bool parallel_enabled() { return g_parallel.load(); }
void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

// ---------------------------------------------------------------------------
// serial reference
// ---------------------------------------------------------------------------
namespace serial {

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double aip = a[static_cast<long>(i) * k + p];
      const double* bp = b + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
  // a is (k, m)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double api = a[static_cast<long>(p) * m + i];
      const double* bp = b + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
  // b is (n, k)
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<long>(i) * k;
    double* ci = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<long>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
}

namespace detail {

inline void conv_fwd_one(const double* x, const double* w, const double* bias, double* y,
                         int C, int H, int W, int O, int K, int stride, int pad, int o) {
  const int OH = conv_out_dim(H, K, stride, pad);
  const int OW = conv_out_dim(W, K, stride, pad);
  double* yo = y + static_cast<long>(o) * OH * OW;
  const double* wo = w + static_cast<long>(o) * C * K * K;
  const double b0 = bias ? bias[o] : 0.0;
  for (long i = 0; i < static_cast<long>(OH) * OW; ++i) yo[i] = b0;
  for (int ci = 0; ci < C; ++ci) {
    const double* xc = x + static_cast<long>(ci) * H * W;
    const double* wc = wo + static_cast<long>(ci) * K * K;
    for (int ky = 0; ky < K; ++ky) {
      for (int kx = 0; kx < K; ++kx) {
        const double wv = wc[ky * K + kx];
        for (int oy = 0; oy < OH; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          double* yrow = yo + static_cast<long>(oy) * OW;
          const double* xrow = xc + static_cast<long>(iy) * W;
          // clip ox so ix = ox*stride - pad + kx stays inside [0, W)
          int ox0 = 0;
          while (ox0 < OW && ox0 * stride - pad + kx < 0) ++ox0;
          int ox1 = OW;
          while (ox1 > ox0 && (ox1 - 1) * stride - pad + kx >= W) --ox1;
          const double* xp = xrow + static_cast<long>(ox0) * stride - pad + kx;
          if (stride == 1) {
            for (int ox = ox0; ox < ox1; ++ox) yrow[ox] += wv * xp[ox - ox0];
          } else {
            for (int ox = ox0; ox < ox1; ++ox)
              yrow[ox] += wv * xp[static_cast<long>(ox - ox0) * stride];
          }
        }
      }
    }
  }
}

inline void conv_bwd_input_one(const double* dy, const double* w, double* dx,
                               int C, int H, int W, int O, int K, int stride, int pad, int ci) {
  const int OH = conv_out_dim(H, K, stride, pad);
  const int OW = conv_out_dim(W, K, stride, pad);
  double* dxc = dx + static_cast<long>(ci) * H * W;
  for (long i = 0; i < static_cast<long>(H) * W; ++i) dxc[i] = 0.0;
  for (int o = 0; o < O; ++o) {
    const double* dyo = dy + static_cast<long>(o) * OH * OW;
    const double* wc = w + (static_cast<long>(o) * C + ci) * K * K;
    for (int ky = 0; ky < K; ++ky) {
      for (int kx = 0; kx < K; ++kx) {
        const double wv = wc[ky * K + kx];
        for (int oy = 0; oy < OH; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          double* dxrow = dxc + static_cast<long>(iy) * W;
          const double* dyrow = dyo + static_cast<long>(oy) * OW;
          int ox0 = 0;
          while (ox0 < OW && ox0 * stride - pad + kx < 0) ++ox0;
          int ox1 = OW;
          while (ox1 > ox0 && (ox1 - 1) * stride - pad + kx >= W) --ox1;
          if (stride == 1) {
            double* dxp = dxrow + ox0 - pad + kx;
            for (int ox = ox0; ox < ox1; ++ox) dxp[ox - ox0] += wv * dyrow[ox];
          } else {
            for (int ox = ox0; ox < ox1; ++ox)
              dxrow[static_cast<long>(ox) * stride - pad + kx] += wv * dyrow[ox];
          }
        }
      }
    }
  }
}

inline void conv_bwd_filter_one(const double* dy, const double* x, double* dw, double* db,
                                int C, int H, int W, int O, int K, int stride, int pad, int o) {
  const int OH = conv_out_dim(H, K, stride, pad);
  const int OW = conv_out_dim(W, K, stride, pad);
  const double* dyo = dy + static_cast<long>(o) * OH * OW;
  double* dwo = dw + static_cast<long>(o) * C * K * K;
  double bsum = 0.0;
  for (int oy = 0; oy < OH; ++oy)
    for (int ox = 0; ox < OW; ++ox) bsum += dyo[static_cast<long>(oy) * OW + ox];
  if (db) db[o] = bsum;
  for (int ci = 0; ci < C; ++ci) {
    const double* xc = x + static_cast<long>(ci) * H * W;
    double* dwc = dwo + static_cast<long>(ci) * K * K;
    for (int ky = 0; ky < K; ++ky) {
      for (int kx = 0; kx < K; ++kx) {
        double s = 0.0;
        for (int oy = 0; oy < OH; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          const double* dyrow = dyo + static_cast<long>(oy) * OW;
          const double* xrow = xc + static_cast<long>(iy) * W;
          int ox0 = 0;
          while (ox0 < OW && ox0 * stride - pad + kx < 0) ++ox0;
          int ox1 = OW;
          while (ox1 > ox0 && (ox1 - 1) * stride - pad + kx >= W) --ox1;
          if (stride == 1) {
            const double* xp = xrow + ox0 - pad + kx;
            for (int ox = ox0; ox < ox1; ++ox) s += dyrow[ox] * xp[ox - ox0];
          } else {
            for (int ox = ox0; ox < ox1; ++ox)
              s += dyrow[ox] * xrow[static_cast<long>(ox) * stride - pad + kx];
          }
        }
        dwc[ky * K + kx] = s;
      }
    }
  }
}

inline void upsample_fwd_one(const double* x, double* y, int H, int W, int c) {
  const double* xc = x + static_cast<long>(c) * H * W;
  double* yc = y + static_cast<long>(c) * 4 * H * W;
  const int OW = 2 * W;
  for (int iy = 0; iy < H; ++iy) {
    for (int ix = 0; ix < W; ++ix) {
      const double v = xc[static_cast<long>(iy) * W + ix];
      double* base = yc + static_cast<long>(2 * iy) * OW + 2 * ix;
      base[0] = v;
      base[1] = v;
      base[OW] = v;
      base[OW + 1] = v;
    }
  }
}

inline void upsample_bwd_one(const double* dy, double* dx, int H, int W, int c) {
  const double* dyc = dy + static_cast<long>(c) * 4 * H * W;
  double* dxc = dx + static_cast<long>(c) * H * W;
  const int OW = 2 * W;
  for (int iy = 0; iy < H; ++iy) {
    for (int ix = 0; ix < W; ++ix) {
      const double* base = dyc + static_cast<long>(2 * iy) * OW + 2 * ix;
      dxc[static_cast<long>(iy) * W + ix] = base[0] + base[1] + base[OW] + base[OW + 1];
    }
  }
}

// Exact overlap integration: output cell (oy,ox) averages the source box
// [oy*H/OH, (oy+1)*H/OH) x [ox*W/OW, (ox+1)*W/OW) with fractional edge weights.
inline void area_resize_one(const double* x, double* y, int H, int W, int OH, int OW, int c) {
  const double* xc = x + static_cast<long>(c) * H * W;
  double* yc = y + static_cast<long>(c) * OH * OW;
  const double sy = static_cast<double>(H) / OH;
  const double sx = static_cast<double>(W) / OW;
  for (int oy = 0; oy < OH; ++oy) {
    const double y0 = oy * sy, y1 = (oy + 1) * sy;
    const int iy0 = static_cast<int>(y0);
    const int iy1 = static_cast<int>(y1) < H ? static_cast<int>(y1) : H - 1;
    for (int ox = 0; ox < OW; ++ox) {
      const double x0 = ox * sx, x1 = (ox + 1) * sx;
      const int ix0 = static_cast<int>(x0);
      const int ix1 = static_cast<int>(x1) < W ? static_cast<int>(x1) : W - 1;
      double acc = 0.0;
      for (int iy = iy0; iy <= iy1; ++iy) {
        const double wy = (iy + 1.0 < y1 ? iy + 1.0 : y1) - (static_cast<double>(iy) > y0 ? iy : y0);
        if (wy <= 0.0) continue;
        for (int ix = ix0; ix <= ix1; ++ix) {
          const double wx =
              (ix + 1.0 < x1 ? ix + 1.0 : x1) - (static_cast<double>(ix) > x0 ? ix : x0);
          if (wx <= 0.0) continue;
          acc += wy * wx * xc[static_cast<long>(iy) * W + ix];
        }
      }
      yc[static_cast<long>(oy) * OW + ox] = acc / (sy * sx);
    }
  }
}

}  // namespace detail

void conv2d_fwd(const double* x, const double* w, const double* bias, double* y,
                int C, int H, int W, int O, int K, int stride, int pad) {
  for (int o = 0; o < O; ++o) detail::conv_fwd_one(x, w, bias, y, C, H, W, O, K, stride, pad, o);
}

void conv2d_bwd_input(const double* dy, const double* w, double* dx,
                      int C, int H, int W, int O, int K, int stride, int pad) {
  for (int ci = 0; ci < C; ++ci)
    detail::conv_bwd_input_one(dy, w, dx, C, H, W, O, K, stride, pad, ci);
}

void conv2d_bwd_filter(const double* dy, const double* x, double* dw, double* db,
                       int C, int H, int W, int O, int K, int stride, int pad) {
  for (int o = 0; o < O; ++o)
    detail::conv_bwd_filter_one(dy, x, dw, db, C, H, W, O, K, stride, pad, o);
}

void upsample2x_fwd(const double* x, double* y, int C, int H, int W) {
  for (int c = 0; c < C; ++c) detail::upsample_fwd_one(x, y, H, W, c);
}

void upsample2x_bwd(const double* dy, double* dx, int C, int H, int W) {
  for (int c = 0; c < C; ++c) detail::upsample_bwd_one(dy, dx, H, W, c);
}

void area_resize(const double* x, double* y, int C, int H, int W, int OH, int OW) {
  for (int c = 0; c < C; ++c) detail::area_resize_one(x, y, H, W, OH, OW, c);
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP kernels. Each output element is owned by exactly one iteration and
// computed with the serial inner-loop order, so serial and omp agree bitwise.
// ---------------------------------------------------------------------------
namespace omp {

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double aip = a[static_cast<long>(i) * k + p];
      const double* bp = b + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double api = a[static_cast<long>(p) * m + i];
      const double* bp = b + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<long>(i) * k;
    double* ci = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<long>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
}

void conv2d_fwd(const double* x, const double* w, const double* bias, double* y,
                int C, int H, int W, int O, int K, int stride, int pad) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < O; ++o)
    serial::detail::conv_fwd_one(x, w, bias, y, C, H, W, O, K, stride, pad, o);
}

void conv2d_bwd_input(const double* dy, const double* w, double* dx,
                      int C, int H, int W, int O, int K, int stride, int pad) {
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < C; ++ci)
    serial::detail::conv_bwd_input_one(dy, w, dx, C, H, W, O, K, stride, pad, ci);
}

void conv2d_bwd_filter(const double* dy, const double* x, double* dw, double* db,
                       int C, int H, int W, int O, int K, int stride, int pad) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < O; ++o)
    serial::detail::conv_bwd_filter_one(dy, x, dw, db, C, H, W, O, K, stride, pad, o);
}

void upsample2x_fwd(const double* x, double* y, int C, int H, int W) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < C; ++c) serial::detail::upsample_fwd_one(x, y, H, W, c);
}

void upsample2x_bwd(const double* dy, double* dx, int C, int H, int W) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < C; ++c) serial::detail::upsample_bwd_one(dy, dx, H, W, c);
}

void area_resize(const double* x, double* y, int C, int H, int W, int OH, int OW) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < C; ++c) serial::detail::area_resize_one(x, y, H, W, OH, OW, c);
}

}  // namespace omp

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------
#define T2I_DISPATCH(fn, ...)            \
  do {                                   \
    if (parallel_enabled())              \
      omp::fn(__VA_ARGS__);              \
    else                                 \
      serial::fn(__VA_ARGS__);           \
  } while (0)

void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n) {
  T2I_DISPATCH(matmul_nn, a, b, c, m, k, n);
}
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n) {
  T2I_DISPATCH(matmul_tn, a, b, c, m, k, n);
}
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n) {
  T2I_DISPATCH(matmul_nt, a, b, c, m, k, n);
}
void conv2d_fwd(const double* x, const double* w, const double* bias, double* y,
                int C, int H, int W, int O, int K, int stride, int pad) {
  T2I_DISPATCH(conv2d_fwd, x, w, bias, y, C, H, W, O, K, stride, pad);
}
void conv2d_bwd_input(const double* dy, const double* w, double* dx,
                      int C, int H, int W, int O, int K, int stride, int pad) {
  T2I_DISPATCH(conv2d_bwd_input, dy, w, dx, C, H, W, O, K, stride, pad);
}
void conv2d_bwd_filter(const double* dy, const double* x, double* dw, double* db,
                       int C, int H, int W, int O, int K, int stride, int pad) {
  T2I_DISPATCH(conv2d_bwd_filter, dy, x, dw, db, C, H, W, O, K, stride, pad);
}
void upsample2x_fwd(const double* x, double* y, int C, int H, int W) {
  T2I_DISPATCH(upsample2x_fwd, x, y, C, H, W);
}
void upsample2x_bwd(const double* dy, double* dx, int C, int H, int W) {
  T2I_DISPATCH(upsample2x_bwd, dy, dx, C, H, W);
}
void area_resize(const double* x, double* y, int C, int H, int W, int OH, int OW) {
  T2I_DISPATCH(area_resize, x, y, C, H, W, OH, OW);
}

#undef T2I_DISPATCH

}  // namespace t2i::kernels
