// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "t2i/core/kernels.hpp"
#include "t2i/core/rng.hpp"
#include "t2i/core/tensor.hpp"

using namespace t2i;

namespace {

std::vector<double> random_vec(size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.gaussian();
  return v;
}

// Brute-force matmul with j-major accumulation, independent of the kernels.
std::vector<double> ref_matmul(const std::vector<double>& a, const std::vector<double>& b,
                               int m, int k, int n) {
  std::vector<double> c(static_cast<size_t>(m) * n, 0.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += a[static_cast<size_t>(i) * k + p] * b[static_cast<size_t>(p) * n + j];
      c[static_cast<size_t>(i) * n + j] = s;
    }
  return c;
}

}  // namespace

TEST_CASE("matmul matches brute force") {
  Rng rng(7);
  const int m = 13, k = 9, n = 17;
  auto a = random_vec(m * k, rng);
  auto b = random_vec(k * n, rng);
  std::vector<double> c(m * n);
  kernels::matmul_nn(a.data(), b.data(), c.data(), m, k, n);
  auto ref = ref_matmul(a, b, m, k, n);
  for (size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("matmul_tn and matmul_nt agree with explicit transposes") {
  Rng rng(8);
  const int m = 6, k = 11, n = 5;
  auto at = random_vec(k * m, rng);  // (k, m)
  auto b = random_vec(k * n, rng);
  std::vector<double> c1(m * n);
  kernels::matmul_tn(at.data(), b.data(), c1.data(), m, k, n);
  std::vector<double> a(m * k);
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) a[static_cast<size_t>(i) * k + p] = at[static_cast<size_t>(p) * m + i];
  auto ref = ref_matmul(a, b, m, k, n);
  for (size_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == doctest::Approx(ref[i]).epsilon(1e-12));

  auto bt = random_vec(n * k, rng);  // (n, k)
  std::vector<double> c2(m * n);
  kernels::matmul_nt(a.data(), bt.data(), c2.data(), m, k, n);
  std::vector<double> b2(k * n);
  for (int p = 0; p < k; ++p)
    for (int j = 0; j < n; ++j) b2[static_cast<size_t>(p) * n + j] = bt[static_cast<size_t>(j) * k + p];
  auto ref2 = ref_matmul(a, b2, m, k, n);
  for (size_t i = 0; i < c2.size(); ++i) CHECK(c2[i] == doctest::Approx(ref2[i]).epsilon(1e-12));
}

TEST_CASE("serial and omp kernels are bit-identical") {
  Rng rng(9);
  const int m = 33, k = 21, n = 29;
  auto a = random_vec(m * k, rng);
  auto b = random_vec(k * n, rng);
  std::vector<double> cs(m * n), cp(m * n);
  kernels::serial::matmul_nn(a.data(), b.data(), cs.data(), m, k, n);
  kernels::omp::matmul_nn(a.data(), b.data(), cp.data(), m, k, n);
  CHECK(cs == cp);

  const int C = 5, H = 12, W = 12, O = 7, K = 3, s = 2, p = 1;
  auto x = random_vec(C * H * W, rng);
  auto w = random_vec(O * C * K * K, rng);
  auto bias = random_vec(O, rng);
  const int OH = kernels::conv_out_dim(H, K, s, p), OW = kernels::conv_out_dim(W, K, s, p);
  std::vector<double> ys(O * OH * OW), yp(O * OH * OW);
  kernels::serial::conv2d_fwd(x.data(), w.data(), bias.data(), ys.data(), C, H, W, O, K, s, p);
  kernels::omp::conv2d_fwd(x.data(), w.data(), bias.data(), yp.data(), C, H, W, O, K, s, p);
  CHECK(ys == yp);

  auto dy = random_vec(O * OH * OW, rng);
  std::vector<double> dxs(C * H * W), dxp(C * H * W);
  kernels::serial::conv2d_bwd_input(dy.data(), w.data(), dxs.data(), C, H, W, O, K, s, p);
  kernels::omp::conv2d_bwd_input(dy.data(), w.data(), dxp.data(), C, H, W, O, K, s, p);
  CHECK(dxs == dxp);

  std::vector<double> dws(O * C * K * K), dwp(O * C * K * K), dbs(O), dbp(O);
  kernels::serial::conv2d_bwd_filter(dy.data(), x.data(), dws.data(), dbs.data(), C, H, W, O, K, s, p);
  kernels::omp::conv2d_bwd_filter(dy.data(), x.data(), dwp.data(), dbp.data(), C, H, W, O, K, s, p);
  CHECK(dws == dwp);
  CHECK(dbs == dbp);

  std::vector<double> us(C * 4 * H * W), up(C * 4 * H * W);
  kernels::serial::upsample2x_fwd(x.data(), us.data(), C, H, W);
  kernels::omp::upsample2x_fwd(x.data(), up.data(), C, H, W);
  CHECK(us == up);

  std::vector<double> rs(C * 6 * 6), rp(C * 6 * 6);
  kernels::serial::area_resize(x.data(), rs.data(), C, H, W, 6, 6);
  kernels::omp::area_resize(x.data(), rp.data(), C, H, W, 6, 6);
  CHECK(rs == rp);
}

TEST_CASE("conv2d matches direct summation") {
  Rng rng(10);
  const int C = 3, H = 7, W = 8, O = 4, K = 3, s = 1, p = 1;
  auto x = random_vec(C * H * W, rng);
  auto w = random_vec(O * C * K * K, rng);
  auto bias = random_vec(O, rng);
  const int OH = kernels::conv_out_dim(H, K, s, p), OW = kernels::conv_out_dim(W, K, s, p);
  std::vector<double> y(O * OH * OW);
  kernels::conv2d_fwd(x.data(), w.data(), bias.data(), y.data(), C, H, W, O, K, s, p);
  for (int o = 0; o < O; ++o)
    for (int oy = 0; oy < OH; ++oy)
      for (int ox = 0; ox < OW; ++ox) {
        double ref = bias[o];
        for (int c = 0; c < C; ++c)
          for (int ky = 0; ky < K; ++ky)
            for (int kx = 0; kx < K; ++kx) {
              const int iy = oy * s - p + ky, ix = ox * s - p + kx;
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
              ref += w[((static_cast<size_t>(o) * C + c) * K + ky) * K + kx] *
                     x[(static_cast<size_t>(c) * H + iy) * W + ix];
            }
        CHECK(y[(static_cast<size_t>(o) * OH + oy) * OW + ox] == doctest::Approx(ref).epsilon(1e-12));
      }
}

TEST_CASE("area_resize conserves the mean and handles constants") {
  Rng rng(11);
  const int C = 2, H = 12, W = 12;
  auto x = random_vec(C * H * W, rng);
  std::vector<double> y(C * 5 * 5);
  kernels::area_resize(x.data(), y.data(), C, H, W, 5, 5);
  for (int c = 0; c < C; ++c) {
    double min = 0, mout = 0;
    for (int i = 0; i < H * W; ++i) min += x[static_cast<size_t>(c) * H * W + i];
    for (int i = 0; i < 25; ++i) mout += y[static_cast<size_t>(c) * 25 + i];
    CHECK(min / (H * W) == doctest::Approx(mout / 25).epsilon(1e-12));
  }

  std::vector<double> cx(1 * H * W, 0.37), cy(1 * 7 * 7);
  kernels::area_resize(cx.data(), cy.data(), 1, H, W, 7, 7);
  for (double v : cy) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("parallel dispatch flag switches implementations") {
  CHECK(kernels::parallel_enabled());
  kernels::set_parallel(false);
  CHECK(!kernels::parallel_enabled());
  kernels::set_parallel(true);
}
