#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "coopred/kernels/kernels.hpp"
#include "coopred/rng.hpp"
#include "doctest.h"

using coopred::Rng;
namespace kern = coopred::kern;

namespace {

std::vector<float> random_vec(Rng& rng, int n, double lo = -2.0, double hi = 2.0) {
  std::vector<float> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return v;
}

/// Independent double-precision matmul oracle, c_sel: 0 = nn, 1 = nt, 2 = tn.
std::vector<double> gemm_oracle(int sel, int m, int k, int n, const std::vector<float>& a,
                                const std::vector<float>& b) {
  const int out_rows = sel == 2 ? k : m;
  std::vector<double> c(static_cast<std::size_t>(out_rows) * n, 0.0);
  if (sel == 0) {
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p)
        for (int j = 0; j < n; ++j)
          c[static_cast<std::size_t>(i) * n + j] +=
              static_cast<double>(a[static_cast<std::size_t>(i) * k + p]) *
              b[static_cast<std::size_t>(p) * n + j];
  } else if (sel == 1) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        for (int p = 0; p < k; ++p)
          c[static_cast<std::size_t>(i) * n + j] +=
              static_cast<double>(a[static_cast<std::size_t>(i) * k + p]) *
              b[static_cast<std::size_t>(j) * k + p];
  } else {
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p)
        for (int j = 0; j < n; ++j)
          c[static_cast<std::size_t>(p) * n + j] +=
              static_cast<double>(a[static_cast<std::size_t>(i) * k + p]) *
              b[static_cast<std::size_t>(i) * n + j];
  }
  return c;
}

bool have_avx2() { return kern::avx2_available(); }

}  // namespace

TEST_CASE("gemm variants match a double-precision oracle on both backends") {
  Rng rng(101);
  const int shapes[][3] = {{1, 1, 1},  {1, 7, 1},   {3, 5, 9},    {4, 16, 16},
                           {5, 13, 17}, {8, 64, 24}, {17, 31, 33}, {64, 256, 64}};
  for (int sel = 0; sel < 3; ++sel) {
    for (const auto& sh : shapes) {
      const int m = sh[0], k = sh[1], n = sh[2];
      const auto a = random_vec(rng, m * k);
      const auto b = random_vec(rng, sel == 1 ? n * k : (sel == 2 ? m * n : k * n));
      const auto oracle = gemm_oracle(sel, m, k, n, a, b);
      const int out_rows = sel == 2 ? k : m;

      auto run = [&](const kern::Ops& ops, bool acc) {
        std::vector<float> c(static_cast<std::size_t>(out_rows) * n,
                             acc ? 0.5f : -99.0f);
        const auto fn = sel == 0 ? ops.gemm_nn : (sel == 1 ? ops.gemm_nt : ops.gemm_tn);
        fn(m, k, n, a.data(), b.data(), c.data(), acc);
        for (std::size_t i = 0; i < c.size(); ++i) {
          const double want = oracle[i] + (acc ? 0.5 : 0.0);
          const double tol = 1e-4 * std::max(1.0, std::abs(want));
          CAPTURE(sel);
          CAPTURE(m);
          CAPTURE(k);
          CAPTURE(n);
          REQUIRE(std::abs(c[i] - want) <= tol);
        }
      };
      run(kern::scalar_ops(), false);
      run(kern::scalar_ops(), true);
      if (have_avx2()) {
        run(kern::avx2_ops(), false);
        run(kern::avx2_ops(), true);
      }
    }
  }
}

TEST_CASE("elementwise kernels agree across backends") {
  if (!have_avx2()) return;
  Rng rng(77);
  const auto& s = kern::scalar_ops();
  const auto& a2 = kern::avx2_ops();
  for (int n : {1, 3, 8, 9, 16, 31, 1000}) {
    const auto x = random_vec(rng, n, -6.0, 6.0);
    const auto y = random_vec(rng, n, -6.0, 6.0);
    std::vector<float> r1(x.size()), r2(x.size());

    s.vadd(n, x.data(), y.data(), r1.data());
    a2.vadd(n, x.data(), y.data(), r2.data());
    for (int i = 0; i < n; ++i) CHECK(r1[i] == r2[i]);

    s.vmul(n, x.data(), y.data(), r1.data());
    a2.vmul(n, x.data(), y.data(), r2.data());
    for (int i = 0; i < n; ++i) CHECK(r1[i] == r2[i]);

    r1 = y;
    r2 = y;
    s.scal(n, 1.7f, r1.data());
    a2.scal(n, 1.7f, r2.data());
    for (int i = 0; i < n; ++i) CHECK(r1[i] == r2[i]);

    r1 = y;
    r2 = y;
    s.axpy(n, 0.37f, x.data(), r1.data());
    a2.axpy(n, 0.37f, x.data(), r2.data());
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(r1[i] - r2[i]) <= 1e-6f * std::max(1.0f, std::abs(r1[i])));
  }
}

TEST_CASE("transcendental kernels agree within tolerance") {
  if (!have_avx2()) return;
  Rng rng(33);
  const auto& s = kern::scalar_ops();
  const auto& a2 = kern::avx2_ops();
  for (int n : {1, 7, 8, 40, 500}) {
    // vexp equivalence is contractual for |x| <= 80 (the AVX2 variant clamps
    // around +-87.3 to stay finite, where std::exp over/underflows)
    const auto x = random_vec(rng, n, -30.0, 30.0);
    std::vector<float> r1(x.size()), r2(x.size());

    s.vexp(n, x.data(), r1.data());
    a2.vexp(n, x.data(), r2.data());
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(r1[i] - r2[i]) <= 1e-6f + 2e-6f * std::abs(r1[i]));

    s.vtanh(n, x.data(), r1.data());
    a2.vtanh(n, x.data(), r2.data());
    for (int i = 0; i < n; ++i) CHECK(std::abs(r1[i] - r2[i]) <= 2e-6f);

    s.vsigmoid(n, x.data(), r1.data());
    a2.vsigmoid(n, x.data(), r2.data());
    for (int i = 0; i < n; ++i) CHECK(std::abs(r1[i] - r2[i]) <= 2e-6f);

    const auto g = random_vec(rng, n, -5.0, 5.0);
    s.gelu(n, g.data(), r1.data());
    a2.gelu(n, g.data(), r2.data());
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(r1[i] - r2[i]) <= 1e-6f + 1e-5f * std::abs(r1[i]));

    const auto dy = random_vec(rng, n, -1.0, 1.0);
    std::vector<float> d1(x.size(), 0.25f), d2(x.size(), 0.25f);
    s.gelu_grad(n, g.data(), dy.data(), d1.data());
    a2.gelu_grad(n, g.data(), dy.data(), d2.data());
    for (int i = 0; i < n; ++i) CHECK(std::abs(d1[i] - d2[i]) <= 1e-5f);
  }
}

TEST_CASE("reductions agree within reassociation tolerance") {
  if (!have_avx2()) return;
  Rng rng(55);
  const auto& s = kern::scalar_ops();
  const auto& a2 = kern::avx2_ops();
  for (int n : {1, 5, 8, 17, 256, 10000}) {
    const auto x = random_vec(rng, n, -1.0, 1.0);
    const auto y = random_vec(rng, n, -1.0, 1.0);
    double sum_abs = 0.0;
    for (float v : x) sum_abs += std::abs(v);

    CHECK(std::abs(s.vsum(n, x.data()) - a2.vsum(n, x.data())) <= 1e-6 * (1.0 + sum_abs));
    CHECK(std::abs(s.vdot(n, x.data(), y.data()) - a2.vdot(n, x.data(), y.data())) <=
          1e-6 * (1.0 + sum_abs));
    CHECK(s.vmax(n, x.data()) == a2.vmax(n, x.data()));
  }
}

TEST_CASE("backend dispatch honors explicit selection") {
  const kern::Backend initial = kern::active_backend();
  kern::set_backend(kern::Backend::kScalar);
  CHECK(kern::active_backend() == kern::Backend::kScalar);
  CHECK(kern::ops().gemm_nn == kern::scalar_ops().gemm_nn);
  if (have_avx2()) {
    kern::set_backend(kern::Backend::kAvx2);
    CHECK(kern::active_backend() == kern::Backend::kAvx2);
    CHECK(kern::ops().gemm_nn == kern::avx2_ops().gemm_nn);
    CHECK(kern::ops().gemm_nn != kern::scalar_ops().gemm_nn);
  } else {
    CHECK_THROWS(kern::set_backend(kern::Backend::kAvx2));
  }
  kern::set_backend(initial);
}
