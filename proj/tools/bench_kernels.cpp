// SPDX-License-Identifier: Apache-2.0
//
// Times the OpenMP kernels against the serial reference on the tensor shapes
// the training loop actually hits, and verifies they agree bitwise.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "t2i/core/kernels.hpp"
#include "t2i/core/rng.hpp"

using namespace t2i;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<double> randv(size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.gaussian();
  return v;
}

void row(const std::string& name, double serial_ms, double omp_ms, bool equal) {
  std::printf("%-34s %10.3f ms %10.3f ms %8.2fx   %s\n", name.c_str(), serial_ms, omp_ms,
              serial_ms / omp_ms, equal ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main() {
  Rng rng(42);
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-34s %13s %13s %9s\n", "kernel", "serial", "omp", "speedup");

  {
    const int m = 256, k = 256, n = 256;
    auto a = randv(static_cast<size_t>(m) * k, rng);
    auto b = randv(static_cast<size_t>(k) * n, rng);
    std::vector<double> cs(static_cast<size_t>(m) * n), cp(cs.size());
    const double ts = time_of([&] { kernels::serial::matmul_nn(a.data(), b.data(), cs.data(), m, k, n); }, 5);
    const double tp = time_of([&] { kernels::omp::matmul_nn(a.data(), b.data(), cp.data(), m, k, n); }, 5);
    row("matmul_nn 256x256x256", ts, tp, cs == cp);
  }
  {
    const int C = 16, H = 64, W = 64, O = 16, K = 3, s = 1, p = 1;
    auto x = randv(static_cast<size_t>(C) * H * W, rng);
    auto w = randv(static_cast<size_t>(O) * C * K * K, rng);
    auto bias = randv(O, rng);
    const int OH = kernels::conv_out_dim(H, K, s, p), OW = kernels::conv_out_dim(W, K, s, p);
    std::vector<double> ys(static_cast<size_t>(O) * OH * OW), yp(ys.size());
    const double ts = time_of([&] { kernels::serial::conv2d_fwd(x.data(), w.data(), bias.data(), ys.data(), C, H, W, O, K, s, p); }, 5);
    const double tp = time_of([&] { kernels::omp::conv2d_fwd(x.data(), w.data(), bias.data(), yp.data(), C, H, W, O, K, s, p); }, 5);
    row("conv2d_fwd 16ch 64px k3", ts, tp, ys == yp);

    auto dy = randv(ys.size(), rng);
    std::vector<double> dxs(x.size()), dxp(x.size());
    const double tbs = time_of([&] { kernels::serial::conv2d_bwd_input(dy.data(), w.data(), dxs.data(), C, H, W, O, K, s, p); }, 5);
    const double tbp = time_of([&] { kernels::omp::conv2d_bwd_input(dy.data(), w.data(), dxp.data(), C, H, W, O, K, s, p); }, 5);
    row("conv2d_bwd_input 16ch 64px", tbs, tbp, dxs == dxp);

    std::vector<double> dws(w.size()), dwp(w.size()), dbs(O), dbp(O);
    const double tfs = time_of([&] { kernels::serial::conv2d_bwd_filter(dy.data(), x.data(), dws.data(), dbs.data(), C, H, W, O, K, s, p); }, 5);
    const double tfp = time_of([&] { kernels::omp::conv2d_bwd_filter(dy.data(), x.data(), dwp.data(), dbp.data(), C, H, W, O, K, s, p); }, 5);
    row("conv2d_bwd_filter 16ch 64px", tfs, tfp, dws == dwp && dbs == dbp);
  }
  {
    const int C = 24, H = 32, W = 32;
    auto x = randv(static_cast<size_t>(C) * H * W, rng);
    std::vector<double> ys(static_cast<size_t>(C) * 4 * H * W), yp(ys.size());
    const double ts = time_of([&] { kernels::serial::upsample2x_fwd(x.data(), ys.data(), C, H, W); }, 50);
    const double tp = time_of([&] { kernels::omp::upsample2x_fwd(x.data(), yp.data(), C, H, W); }, 50);
    row("upsample2x 24ch 32->64", ts, tp, ys == yp);
  }
  {
    const int C = 3, H = 256, W = 256;
    auto x = randv(static_cast<size_t>(C) * H * W, rng);
    std::vector<double> ys(static_cast<size_t>(C) * 64 * 64), yp(ys.size());
    const double ts = time_of([&] { kernels::serial::area_resize(x.data(), ys.data(), C, H, W, 64, 64); }, 20);
    const double tp = time_of([&] { kernels::omp::area_resize(x.data(), yp.data(), C, H, W, 64, 64); }, 20);
    row("area_resize 256->64", ts, tp, ys == yp);
  }
  return 0;
}
