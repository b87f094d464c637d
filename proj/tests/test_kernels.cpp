#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <cstring>
#include <vector>

#include "md/kernels.hpp"
#include "md/rng.hpp"

using namespace md;
namespace ks = md::kernels::serial;
namespace ko = md::kernels::omp;

namespace {

template <typename T>
std::vector<T> draw(std::size_t n, std::uint64_t seed) {
  const auto v = normal_draw(n, 1.0, seed);
  return std::vector<T>(v.begin(), v.end());
}

template <typename T>
bool bitwise_equal(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

kernels::ConvGeometry conv_geometry(std::size_t cin, std::size_t h, std::size_t w, std::size_t cout, std::size_t k,
                                    std::size_t s, std::size_t p) {
  kernels::ConvGeometry g{cin, h, w, cout, 0, 0, k, s, p};
  g.out_h = (h + 2 * p - k) / s + 1;
  g.out_w = (w + 2 * p - k) / s + 1;
  return g;
}

kernels::ConvGeometry deconv_geometry(std::size_t cin, std::size_t h, std::size_t w, std::size_t cout,
                                      std::size_t k, std::size_t s, std::size_t p) {
  kernels::ConvGeometry g{cin, h, w, cout, 0, 0, k, s, p};
  g.out_h = (h - 1) * s - 2 * p + k;
  g.out_w = (w - 1) * s - 2 * p + k;
  return g;
}

template <typename T>
void compare_all(int threads) {
  omp_set_num_threads(threads);
  CHECK(kernels::thread_count() == threads);

  for (auto [m, k, n] : {std::array<std::size_t, 3>{1, 1, 1}, {7, 13, 5}, {64, 33, 96}, {3, 257, 2}}) {
    const auto a = draw<T>(m * k, 1), b = draw<T>(k * n, 2), bt = draw<T>(n * k, 3), at = draw<T>(k * m, 4);
    std::vector<T> c1(m * n), c2(m * n);
    ks::matmul_nn<T>(a, b, c1, m, k, n);
    ko::matmul_nn<T>(a, b, c2, m, k, n);
    CHECK(bitwise_equal(c1, c2));
    ks::matmul_nt<T>(a, bt, c1, m, k, n);
    ko::matmul_nt<T>(a, bt, c2, m, k, n);
    CHECK(bitwise_equal(c1, c2));
    ks::matmul_tn<T>(at, b, c1, m, k, n);
    ko::matmul_tn<T>(at, b, c2, m, k, n);
    CHECK(bitwise_equal(c1, c2));
  }

  for (const auto& g : {conv_geometry(3, 17, 13, 5, 3, 1, 1), conv_geometry(4, 16, 16, 6, 4, 4, 0),
                        conv_geometry(2, 9, 11, 3, 3, 2, 1)}) {
    const auto x = draw<T>(g.in_channels * g.in_h * g.in_w, 5);
    const auto w = draw<T>(g.out_channels * g.in_channels * g.kernel * g.kernel, 6);
    const auto bias = draw<T>(g.out_channels, 7);
    const auto dy = draw<T>(g.out_channels * g.out_h * g.out_w, 8);
    std::vector<T> y1(dy.size()), y2(dy.size());
    ks::conv2d<T>(x, w, bias, y1, g);
    ko::conv2d<T>(x, w, bias, y2, g);
    CHECK(bitwise_equal(y1, y2));
    std::vector<T> dw1(w.size()), dw2(w.size()), db1(bias.size()), db2(bias.size());
    ks::conv2d_weight_grad<T>(x, dy, dw1, db1, g);
    ko::conv2d_weight_grad<T>(x, dy, dw2, db2, g);
    CHECK(bitwise_equal(dw1, dw2));
    CHECK(bitwise_equal(db1, db2));
  }

  for (const auto& g : {deconv_geometry(6, 5, 5, 4, 4, 4, 0), deconv_geometry(3, 6, 7, 2, 3, 2, 1),
                        deconv_geometry(4, 8, 8, 1, 4, 4, 0)}) {
    const auto x = draw<T>(g.in_channels * g.in_h * g.in_w, 9);
    const auto w = draw<T>(g.in_channels * g.out_channels * g.kernel * g.kernel, 10);
    const auto bias = draw<T>(g.out_channels, 11);
    const auto dy = draw<T>(g.out_channels * g.out_h * g.out_w, 12);
    std::vector<T> y1(dy.size()), y2(dy.size());
    ks::conv_transpose2d<T>(x, w, bias, y1, g);
    ko::conv_transpose2d<T>(x, w, bias, y2, g);
    CHECK(bitwise_equal(y1, y2));
    std::vector<T> dw1(w.size()), dw2(w.size()), db1(bias.size()), db2(bias.size());
    ks::conv_transpose2d_weight_grad<T>(x, dy, dw1, db1, g);
    ko::conv_transpose2d_weight_grad<T>(x, dy, dw2, db2, g);
    CHECK(bitwise_equal(dw1, dw2));
    CHECK(bitwise_equal(db1, db2));
  }

  for (auto [c, ih, iw, oh, ow] : {std::array<std::size_t, 5>{2, 22, 22, 352, 352}, {3, 64, 48, 17, 29},
                                   {1, 5, 5, 5, 5}}) {
    const auto x = draw<T>(c * ih * iw, 13);
    std::vector<T> y1(c * oh * ow), y2(c * oh * ow);
    ks::bilinear_resize<T>(x, y1, c, ih, iw, oh, ow);
    ko::bilinear_resize<T>(x, y2, c, ih, iw, oh, ow);
    CHECK(bitwise_equal(y1, y2));
  }
}

}  // namespace

TEST_CASE("omp kernels match the serial reference bitwise") {
  const int saved = omp_get_max_threads();
  for (int threads : {1, 2, 3, 8}) {
    CAPTURE(threads);
    compare_all<float>(threads);
    compare_all<double>(threads);
  }
  omp_set_num_threads(saved);
}

TEST_CASE("serial matmul against a naive triple loop") {
  const std::size_t m = 4, k = 6, n = 3;
  const auto a = draw<double>(m * k, 20), b = draw<double>(k * n, 21);
  std::vector<double> c(m * n);
  ks::matmul_nn<double>(a, b, c, m, k, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      CHECK(c[i * n + j] == doctest::Approx(acc).epsilon(1e-13));
    }
}

TEST_CASE("linear taps follow half-pixel centers") {
  const auto t = kernels::linear_tap(0, 2, 4);  // source coordinate -0.25 clamps to 0
  CHECK(t.lo == 0);
  CHECK(t.frac == 0.0);
  const auto mid = kernels::linear_tap(1, 2, 4);  // source coordinate 0.25
  CHECK(mid.lo == 0);
  CHECK(mid.hi == 1);
  CHECK(mid.frac == doctest::Approx(0.25));
  const auto last = kernels::linear_tap(3, 2, 4);
  CHECK(last.lo == 1);
  CHECK(last.hi == 1);
}
