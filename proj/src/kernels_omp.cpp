#include <omp.h>

#include <algorithm>
#include <vector>

#include "md/kernels.hpp"

namespace md::kernels {

int thread_count() { return omp_get_max_threads(); }

namespace {

constexpr std::size_t kRowBlock = 8;
constexpr std::size_t kColBlock = 256;

// Valid output range [lo, hi) along one axis for a gather `in = out*s + kk - p`.
struct Range {
  std::size_t lo, hi;
};
Range gather_range(std::size_t kk, std::size_t stride, std::size_t pad, std::size_t in_size, std::size_t out_size) {
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const auto off = static_cast<std::ptrdiff_t>(kk) - static_cast<std::ptrdiff_t>(pad);
  std::ptrdiff_t lo = 0;
  if (off < 0) lo = (-off + s - 1) / s;
  const std::ptrdiff_t last_in = static_cast<std::ptrdiff_t>(in_size) - 1 - off;
  std::ptrdiff_t hi = last_in < 0 ? 0 : last_in / s + 1;
  hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(out_size));
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

template <typename T>
std::vector<T> transposed(std::span<const T> src, std::size_t rows, std::size_t cols) {
  std::vector<T> dst(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  return dst;
}

}  // namespace

namespace omp {

// Row-blocked i-k-j product. Every c[i][j] is 0 + a[i][0]b[0][j] + a[i][1]b[1][j] + ...
// in increasing k, matching the serial dot product.
template <typename T>
void matmul_nn(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m, std::size_t k,
               std::size_t n) {
  const auto blocks = static_cast<std::ptrdiff_t>((m + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = static_cast<std::size_t>(blk) * kRowBlock;
    const std::size_t i1 = std::min(m, i0 + kRowBlock);
    for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
      const std::size_t j1 = std::min(n, j0 + kColBlock);
      for (std::size_t i = i0; i < i1; ++i) std::fill(c.begin() + i * n + j0, c.begin() + i * n + j1, T(0));
      for (std::size_t p = 0; p < k; ++p) {
        const T* brow = b.data() + p * n;
        for (std::size_t i = i0; i < i1; ++i) {
          const T aip = a[i * k + p];
          T* crow = c.data() + i * n;
          for (std::size_t j = j0; j < j1; ++j) crow[j] += aip * brow[j];
        }
      }
    }
  }
}

template <typename T>
void matmul_nt(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m, std::size_t k,
               std::size_t n) {
  const std::vector<T> bt = transposed(b, n, k);
  matmul_nn<T>(a, bt, c, m, k, n);
}

template <typename T>
void matmul_tn(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m, std::size_t k,
               std::size_t n) {
  const std::vector<T> at = transposed(a, k, m);
  matmul_nn<T>(at, b, c, m, k, n);
}

template <typename T>
void conv2d(std::span<const T> x, std::span<const T> w, std::span<const T> bias, std::span<T> out,
            const ConvGeometry& g) {
  const std::size_t k = g.kernel;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t co_i = 0; co_i < static_cast<std::ptrdiff_t>(g.out_channels); ++co_i) {
    const auto co = static_cast<std::size_t>(co_i);
    T* plane = out.data() + co * g.out_h * g.out_w;
    std::fill_n(plane, g.out_h * g.out_w, bias.empty() ? T(0) : bias[co]);
    for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
      const T* xin = x.data() + ci * g.in_h * g.in_w;
      for (std::size_t ky = 0; ky < k; ++ky) {
        const Range ry = gather_range(ky, g.stride, g.padding, g.in_h, g.out_h);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const Range rx = gather_range(kx, g.stride, g.padding, g.in_w, g.out_w);
          const T wv = w[((co * g.in_channels + ci) * k + ky) * k + kx];
          for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
            const T* xrow = xin + (oy * g.stride + ky - g.padding) * g.in_w;
            T* orow = plane + oy * g.out_w;
            if (g.stride == 1) {
              for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) orow[ox] += wv * xrow[ox + kx - g.padding];
            } else {
              for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) orow[ox] += wv * xrow[ox * g.stride + kx - g.padding];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_weight_grad(std::span<const T> x, std::span<const T> dy, std::span<T> dw, std::span<T> db,
                        const ConvGeometry& g) {
  const std::size_t k = g.kernel;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t co_i = 0; co_i < static_cast<std::ptrdiff_t>(g.out_channels); ++co_i) {
    const auto co = static_cast<std::size_t>(co_i);
    const T* dplane = dy.data() + co * g.out_h * g.out_w;
    if (!db.empty()) {
      T acc = 0;
      for (std::size_t i = 0; i < g.out_h * g.out_w; ++i) acc += dplane[i];
      db[co] = acc;
    }
    for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
      const T* xin = x.data() + ci * g.in_h * g.in_w;
      for (std::size_t ky = 0; ky < k; ++ky) {
        const Range ry = gather_range(ky, g.stride, g.padding, g.in_h, g.out_h);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const Range rx = gather_range(kx, g.stride, g.padding, g.in_w, g.out_w);
          T acc = 0;
          for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
            const T* xrow = xin + (oy * g.stride + ky - g.padding) * g.in_w;
            const T* drow = dplane + oy * g.out_w;
            for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) acc += drow[ox] * xrow[ox * g.stride + kx - g.padding];
          }
          dw[((co * g.in_channels + ci) * k + ky) * k + kx] = acc;
        }
      }
    }
  }
}

template <typename T>
void conv_transpose2d(std::span<const T> x, std::span<const T> w, std::span<const T> bias, std::span<T> out,
                      const ConvGeometry& g) {
  const std::size_t k = g.kernel;
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t co_i = 0; co_i < static_cast<std::ptrdiff_t>(g.out_channels); ++co_i) {
    const auto co = static_cast<std::size_t>(co_i);
    T* plane = out.data() + co * g.out_h * g.out_w;
    std::fill_n(plane, g.out_h * g.out_w, bias.empty() ? T(0) : bias[co]);
    for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
      const T* xin = x.data() + ci * g.in_h * g.in_w;
      const T* wk = w.data() + (ci * g.out_channels + co) * k * k;
      for (std::size_t iy = 0; iy < g.in_h; ++iy) {
        for (std::size_t ix = 0; ix < g.in_w; ++ix) {
          const T v = xin[iy * g.in_w + ix];
          for (std::size_t ky = 0; ky < k; ++ky) {
            const auto oy = static_cast<std::ptrdiff_t>(iy * g.stride + ky) - pad;
            if (oy < 0 || oy >= static_cast<std::ptrdiff_t>(g.out_h)) continue;
            T* orow = plane + static_cast<std::size_t>(oy) * g.out_w;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const auto ox = static_cast<std::ptrdiff_t>(ix * g.stride + kx) - pad;
              if (ox < 0 || ox >= static_cast<std::ptrdiff_t>(g.out_w)) continue;
              orow[ox] += v * wk[ky * k + kx];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv_transpose2d_weight_grad(std::span<const T> x, std::span<const T> dy, std::span<T> dw, std::span<T> db,
                                  const ConvGeometry& g) {
  const std::size_t k = g.kernel;
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  if (!db.empty()) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t co_i = 0; co_i < static_cast<std::ptrdiff_t>(g.out_channels); ++co_i) {
      const auto co = static_cast<std::size_t>(co_i);
      T acc = 0;
      for (std::size_t i = 0; i < g.out_h * g.out_w; ++i) acc += dy[co * g.out_h * g.out_w + i];
      db[co] = acc;
    }
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci_i = 0; ci_i < static_cast<std::ptrdiff_t>(g.in_channels); ++ci_i) {
    const auto ci = static_cast<std::size_t>(ci_i);
    const T* xin = x.data() + ci * g.in_h * g.in_w;
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      const T* dplane = dy.data() + co * g.out_h * g.out_w;
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          T acc = 0;
          for (std::size_t iy = 0; iy < g.in_h; ++iy) {
            const auto oy = static_cast<std::ptrdiff_t>(iy * g.stride + ky) - pad;
            if (oy < 0 || oy >= static_cast<std::ptrdiff_t>(g.out_h)) continue;
            for (std::size_t ix = 0; ix < g.in_w; ++ix) {
              const auto ox = static_cast<std::ptrdiff_t>(ix * g.stride + kx) - pad;
              if (ox < 0 || ox >= static_cast<std::ptrdiff_t>(g.out_w)) continue;
              acc += xin[iy * g.in_w + ix] * dplane[static_cast<std::size_t>(oy) * g.out_w + static_cast<std::size_t>(ox)];
            }
          }
          dw[((ci * g.out_channels + co) * k + ky) * k + kx] = acc;
        }
      }
    }
  }
}

template <typename T>
void bilinear_resize(std::span<const T> x, std::span<T> out, std::size_t channels, std::size_t in_h,
                     std::size_t in_w, std::size_t out_h, std::size_t out_w) {
  std::vector<LinearTap> tx(out_w);
  for (std::size_t ox = 0; ox < out_w; ++ox) tx[ox] = linear_tap(ox, in_w, out_w);
  const auto rows = static_cast<std::ptrdiff_t>(channels * out_h);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::size_t c = static_cast<std::size_t>(r) / out_h;
    const std::size_t oy = static_cast<std::size_t>(r) % out_h;
    const T* plane = x.data() + c * in_h * in_w;
    const LinearTap ty = linear_tap(oy, in_h, out_h);
    const T wy = static_cast<T>(ty.frac);
    T* orow = out.data() + (c * out_h + oy) * out_w;
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const T wx = static_cast<T>(tx[ox].frac);
      const T top = plane[ty.lo * in_w + tx[ox].lo] * (T(1) - wx) + plane[ty.lo * in_w + tx[ox].hi] * wx;
      const T bot = plane[ty.hi * in_w + tx[ox].lo] * (T(1) - wx) + plane[ty.hi * in_w + tx[ox].hi] * wx;
      orow[ox] = top * (T(1) - wy) + bot * wy;
    }
  }
}

#define MD_INSTANTIATE(T)                                                                                    \
  template void matmul_nn<T>(std::span<const T>, std::span<const T>, std::span<T>, std::size_t, std::size_t, \
                             std::size_t);                                                                   \
  template void matmul_nt<T>(std::span<const T>, std::span<const T>, std::span<T>, std::size_t, std::size_t, \
                             std::size_t);                                                                   \
  template void matmul_tn<T>(std::span<const T>, std::span<const T>, std::span<T>, std::size_t, std::size_t, \
                             std::size_t);                                                                   \
  template void conv2d<T>(std::span<const T>, std::span<const T>, std::span<const T>, std::span<T>,          \
                          const ConvGeometry&);                                                              \
  template void conv2d_weight_grad<T>(std::span<const T>, std::span<const T>, std::span<T>, std::span<T>,    \
                                      const ConvGeometry&);                                                  \
  template void conv_transpose2d<T>(std::span<const T>, std::span<const T>, std::span<const T>, std::span<T>, \
                                    const ConvGeometry&);                                                    \
  template void conv_transpose2d_weight_grad<T>(std::span<const T>, std::span<const T>, std::span<T>,        \
                                                std::span<T>, const ConvGeometry&);                          \
  template void bilinear_resize<T>(std::span<const T>, std::span<T>, std::size_t, std::size_t, std::size_t,  \
                                   std::size_t, std::size_t);

MD_INSTANTIATE(float)
MD_INSTANTIATE(double)
#undef MD_INSTANTIATE

}  // namespace omp
}  // namespace md::kernels
