#include <algorithm>
#include <cmath>

#include "md/kernels.hpp"

namespace md::kernels {

LinearTap linear_tap(std::size_t out_index, std::size_t in_size, std::size_t out_size) {
  const double scale = static_cast<double>(in_size) / static_cast<double>(out_size);
  double src = (static_cast<double>(out_index) + 0.5) * scale - 0.5;
  if (src < 0.0) src = 0.0;
  LinearTap tap;
  tap.lo = std::min(static_cast<std::size_t>(std::floor(src)), in_size - 1);
  tap.hi = std::min(tap.lo + 1, in_size - 1);
  tap.frac = src - static_cast<double>(tap.lo);
  if (tap.hi == tap.lo) tap.frac = 0.0;
  return tap;
}

namespace serial {

template <typename T>
void matmul_nn(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m, std::size_t k,
               std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

template <typename T>
void matmul_nt(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m, std::size_t k,
               std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] = acc;
    }
  }
}

template <typename T>
void matmul_tn(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m, std::size_t k,
               std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

template <typename T>
void conv2d(std::span<const T> x, std::span<const T> w, std::span<const T> bias, std::span<T> out,
            const ConvGeometry& g) {
  const std::size_t k = g.kernel;
  for (std::size_t co = 0; co < g.out_channels; ++co) {
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        T acc = bias.empty() ? T(0) : bias[co];
        for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.padding);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const auto ix =
                  static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.padding);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
              acc += w[((co * g.in_channels + ci) * k + ky) * k + kx] *
                     x[(ci * g.in_h + static_cast<std::size_t>(iy)) * g.in_w + static_cast<std::size_t>(ix)];
            }
          }
        }
        out[(co * g.out_h + oy) * g.out_w + ox] = acc;
      }
    }
  }
}

template <typename T>
void conv2d_weight_grad(std::span<const T> x, std::span<const T> dy, std::span<T> dw, std::span<T> db,
                        const ConvGeometry& g) {
  const std::size_t k = g.kernel;
  for (std::size_t co = 0; co < g.out_channels; ++co) {
    const T* dplane = dy.data() + co * g.out_h * g.out_w;
    if (!db.empty()) {
      T acc = 0;
      for (std::size_t i = 0; i < g.out_h * g.out_w; ++i) acc += dplane[i];
      db[co] = acc;
    }
    for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          T acc = 0;
          for (std::size_t oy = 0; oy < g.out_h; ++oy) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.padding);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
            for (std::size_t ox = 0; ox < g.out_w; ++ox) {
              const auto ix =
                  static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.padding);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
              acc += dplane[oy * g.out_w + ox] *
                     x[(ci * g.in_h + static_cast<std::size_t>(iy)) * g.in_w + static_cast<std::size_t>(ix)];
            }
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
  for (std::size_t co = 0; co < g.out_channels; ++co) {
    const T b = bias.empty() ? T(0) : bias[co];
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(co * g.out_h * g.out_w), g.out_h * g.out_w, b);
  }
  for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
    for (std::size_t iy = 0; iy < g.in_h; ++iy) {
      for (std::size_t ix = 0; ix < g.in_w; ++ix) {
        const T v = x[(ci * g.in_h + iy) * g.in_w + ix];
        for (std::size_t co = 0; co < g.out_channels; ++co) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            const auto oy = static_cast<std::ptrdiff_t>(iy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.padding);
            if (oy < 0 || oy >= static_cast<std::ptrdiff_t>(g.out_h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const auto ox =
                  static_cast<std::ptrdiff_t>(ix * g.stride + kx) - static_cast<std::ptrdiff_t>(g.padding);
              if (ox < 0 || ox >= static_cast<std::ptrdiff_t>(g.out_w)) continue;
              out[(co * g.out_h + static_cast<std::size_t>(oy)) * g.out_w + static_cast<std::size_t>(ox)] +=
                  v * w[((ci * g.out_channels + co) * k + ky) * k + kx];
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
  if (!db.empty()) {
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      T acc = 0;
      for (std::size_t i = 0; i < g.out_h * g.out_w; ++i) acc += dy[co * g.out_h * g.out_w + i];
      db[co] = acc;
    }
  }
  for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          T acc = 0;
          for (std::size_t iy = 0; iy < g.in_h; ++iy) {
            const auto oy = static_cast<std::ptrdiff_t>(iy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.padding);
            if (oy < 0 || oy >= static_cast<std::ptrdiff_t>(g.out_h)) continue;
            for (std::size_t ix = 0; ix < g.in_w; ++ix) {
              const auto ox =
                  static_cast<std::ptrdiff_t>(ix * g.stride + kx) - static_cast<std::ptrdiff_t>(g.padding);
              if (ox < 0 || ox >= static_cast<std::ptrdiff_t>(g.out_w)) continue;
              acc += x[(ci * g.in_h + iy) * g.in_w + ix] *
                     dy[(co * g.out_h + static_cast<std::size_t>(oy)) * g.out_w + static_cast<std::size_t>(ox)];
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
  for (std::size_t c = 0; c < channels; ++c) {
    const T* plane = x.data() + c * in_h * in_w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const LinearTap ty = linear_tap(oy, in_h, out_h);
      const T wy = static_cast<T>(ty.frac);
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const LinearTap tx = linear_tap(ox, in_w, out_w);
        const T wx = static_cast<T>(tx.frac);
        const T top = plane[ty.lo * in_w + tx.lo] * (T(1) - wx) + plane[ty.lo * in_w + tx.hi] * wx;
        const T bot = plane[ty.hi * in_w + tx.lo] * (T(1) - wx) + plane[ty.hi * in_w + tx.hi] * wx;
        out[(c * out_h + oy) * out_w + ox] = top * (T(1) - wy) + bot * wy;
      }
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

}  // namespace serial
}  // namespace md::kernels
