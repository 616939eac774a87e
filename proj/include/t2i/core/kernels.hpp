// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace t2i::kernels {

// Runtime switch between the OpenMP kernels and the serial reference path.
// Both compute each output element with the same inner-loop order, so results
// are bit-identical regardless of thread count.
void set_parallel(bool enabled);
bool parallel_enabled();

// Thread count hint; 0 keeps the OpenMP default.
void set_threads(int n);

// C(m,n) = A(m,k) * B(k,n)
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n);
// C(m,n) = A(k,m)^T * B(k,n)
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);
// C(m,n) = A(m,k) * B(n,k)^T
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);

// y(O,OH,OW) = conv(x(C,H,W), w(O,C,K,K)) + bias(O); OH = (H + 2p - K)/s + 1.
void conv2d_fwd(const double* x, const double* w, const double* bias, double* y,
                int C, int H, int W, int O, int K, int stride, int pad);
void conv2d_bwd_input(const double* dy, const double* w, double* dx,
                      int C, int H, int W, int O, int K, int stride, int pad);
void conv2d_bwd_filter(const double* dy, const double* x, double* dw, double* db,
                       int C, int H, int W, int O, int K, int stride, int pad);

// Nearest-neighbor 2x upsampling, CHW.
void upsample2x_fwd(const double* x, double* y, int C, int H, int W);
void upsample2x_bwd(const double* dy, double* dx, int C, int H, int W);

// Exact box-integration resize (area averaging), CHW. Not differentiated;
// used only by dataset preprocessing.
void area_resize(const double* x, double* y, int C, int H, int W, int OH, int OW);

namespace serial {
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);
void conv2d_fwd(const double* x, const double* w, const double* bias, double* y,
                int C, int H, int W, int O, int K, int stride, int pad);
void conv2d_bwd_input(const double* dy, const double* w, double* dx,
                      int C, int H, int W, int O, int K, int stride, int pad);
void conv2d_bwd_filter(const double* dy, const double* x, double* dw, double* db,
                       int C, int H, int W, int O, int K, int stride, int pad);
void upsample2x_fwd(const double* x, double* y, int C, int H, int W);
void upsample2x_bwd(const double* dy, double* dx, int C, int H, int W);
void area_resize(const double* x, double* y, int C, int H, int W, int OH, int OW);
}  // namespace serial

namespace omp {
void matmul_nn(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_tn(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n);
void conv2d_fwd(const double* x, const double* w, const double* bias, double* y,
                int C, int H, int W, int O, int K, int stride, int pad);
void conv2d_bwd_input(const double* dy, const double* w, double* dx,
                      int C, int H, int W, int O, int K, int stride, int pad);
void conv2d_bwd_filter(const double* dy, const double* x, double* dw, double* db,
                       int C, int H, int W, int O, int K, int stride, int pad);
void upsample2x_fwd(const double* x, double* y, int C, int H, int W);
void upsample2x_bwd(const double* dy, double* dx, int C, int H, int W);
void area_resize(const double* x, double* y, int C, int H, int W, int OH, int OW);
}  // namespace omp

inline int conv_out_dim(int n, int K, int stride, int pad) {
  return (n + 2 * pad - K) / stride + 1;
}

}  // namespace t2i::kernels
