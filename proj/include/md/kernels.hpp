#pragma once

// Dense numeric kernels behind the differentiable primitives.
//
// Two implementations share every signature: `serial` is the plain reference
// kept for testing, `omp` parallelizes over an outer output index. Each output
// element is reduced in the same order by both, so results agree bitwise for
// any thread count.

#include <cstddef>
#include <span>

namespace md::kernels {

/// Geometry of a 2-D (transposed) convolution over channel-major planes.
/// For conv2d the weight is [out × in × k × k]; for conv_transpose2d it is
/// [in × out × k × k].
struct ConvGeometry {
  std::size_t in_channels = 0, in_h = 0, in_w = 0;
  std::size_t out_channels = 0, out_h = 0, out_w = 0;
  std::size_t kernel = 1, stride = 1, padding = 0;
};

#define MD_KERNEL_DECLS                                                                                   \
  /* c[m×n] = a[m×k] · b[k×n] */                                                                          \
  template <typename T>                                                                                   \
  void matmul_nn(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,               \
                 std::size_t k, std::size_t n);                                                           \
  /* c[m×n] = a[m×k] · b[n×k]ᵀ */                                                                         \
  template <typename T>                                                                                   \
  void matmul_nt(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,               \
                 std::size_t k, std::size_t n);                                                           \
  /* c[m×n] = a[k×m]ᵀ · b[k×n] */                                                                         \
  template <typename T>                                                                                   \
  void matmul_tn(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,               \
                 std::size_t k, std::size_t n);                                                           \
  template <typename T>                                                                                   \
  void conv2d(std::span<const T> x, std::span<const T> w, std::span<const T> bias, std::span<T> out,      \
              const ConvGeometry& g);                                                                     \
  /* dw (and db when non-empty) from input x and output gradient dy */                                    \
  template <typename T>                                                                                   \
  void conv2d_weight_grad(std::span<const T> x, std::span<const T> dy, std::span<T> dw,                   \
                          std::span<T> db, const ConvGeometry& g);                                        \
  template <typename T>                                                                                   \
  void conv_transpose2d(std::span<const T> x, std::span<const T> w, std::span<const T> bias,              \
                        std::span<T> out, const ConvGeometry& g);                                         \
  template <typename T>                                                                                   \
  void conv_transpose2d_weight_grad(std::span<const T> x, std::span<const T> dy, std::span<T> dw,         \
                                    std::span<T> db, const ConvGeometry& g);                              \
  /* align_corners=false bilinear resampling of [c × h × w] planes */                                     \
  template <typename T>                                                                                   \
  void bilinear_resize(std::span<const T> x, std::span<T> out, std::size_t channels, std::size_t in_h,    \
                       std::size_t in_w, std::size_t out_h, std::size_t out_w);

namespace serial {
MD_KERNEL_DECLS
}  // namespace serial

namespace omp {
MD_KERNEL_DECLS
}  // namespace omp

#undef MD_KERNEL_DECLS

/// Source index and weight of one output coordinate under align_corners=false.
struct LinearTap {
  std::size_t lo = 0, hi = 0;
  double frac = 0.0;
};
LinearTap linear_tap(std::size_t out_index, std::size_t in_size, std::size_t out_size);

/// Number of OpenMP threads the `omp` kernels will use.
int thread_count();

}  // namespace md::kernels
