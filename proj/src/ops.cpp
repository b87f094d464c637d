#include "md/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "md/kernels.hpp"

namespace md {

namespace k = kernels::omp;

namespace {

template <typename T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         to_string(t.shape()));
  }
}

template <typename T>
void require_same(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

template <typename T>
Node<T>* node_of(const Tensor<T>& t) {
  return t.defined() ? t.node().get() : nullptr;
}

template <typename T>
bool wants_grad(const Node<T>* n) {
  return n != nullptr && n->requires_grad;
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), kk = a.dim(1), n = b.dim(1);
  if (b.dim(0) != kk) {
    throw DimensionError("matmul: inner dimensions differ, " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  std::vector<T> out(m * n);
  k::matmul_nn<T>(a.data(), b.data(), out, m, kk, n);
  Node<T>* an = node_of(a);
  Node<T>* bn = node_of(b);
  return detail::make_op<T>({m, n}, std::move(out), {&a, &b}, [an, bn, m, kk, n](Node<T>& self) {
    std::vector<T> tmp;
    if (an->requires_grad) {
      tmp.assign(m * kk, T(0));
      k::matmul_nt<T>(self.grad, bn->data, tmp, m, n, kk);
      detail::accumulate<T>(*an, tmp);
    }
    if (bn->requires_grad) {
      tmp.assign(kk * n, T(0));
      k::matmul_tn<T>(an->data, self.grad, tmp, kk, m, n);
      detail::accumulate<T>(*bn, tmp);
    }
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<T> out(r * c);
  auto src = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = src[i * c + j];
  Node<T>* an = node_of(a);
  return detail::make_op<T>({c, r}, std::move(out), {&a}, [an, r, c](Node<T>& self) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) an->grad[i * c + j] += self.grad[j * r + i];
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  Node<T>* an = node_of(a);
  Node<T>* bn = node_of(b);
  return detail::make_op<T>(a.shape(), std::move(out), {&a, &b}, [an, bn](Node<T>& self) {
    if (an->requires_grad) detail::accumulate<T>(*an, self.grad);
    if (bn->requires_grad) detail::accumulate<T>(*bn, self.grad);
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "sub");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  Node<T>* an = node_of(a);
  Node<T>* bn = node_of(b);
  return detail::make_op<T>(a.shape(), std::move(out), {&a, &b}, [an, bn](Node<T>& self) {
    if (an->requires_grad) detail::accumulate<T>(*an, self.grad);
    if (bn->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  Node<T>* an = node_of(a);
  Node<T>* bn = node_of(b);
  return detail::make_op<T>(a.shape(), std::move(out), {&a, &b}, [an, bn](Node<T>& self) {
    if (an->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * bn->data[i];
    if (bn->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i] * an->data[i];
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  Node<T>* an = node_of(a);
  return detail::make_op<T>(a.shape(), std::move(out), {&a}, [an, factor](Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& b) {
  const std::size_t d = x.shape().back();
  if (b.size() != d || b.rank() != 1) {
    throw DimensionError("add_bias: bias " + to_string(b.shape()) + " does not match trailing dim of " +
                         to_string(x.shape()));
  }
  const std::size_t rows = x.size() / d;
  std::vector<T> out(x.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = x.data()[r * d + j] + b.data()[j];
  Node<T>* xn = node_of(x);
  Node<T>* bn = node_of(b);
  return detail::make_op<T>(x.shape(), std::move(out), {&x, &b}, [xn, bn, rows, d](Node<T>& self) {
    if (xn->requires_grad) detail::accumulate<T>(*xn, self.grad);
    if (bn->requires_grad)
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < d; ++j) bn->grad[j] += self.grad[r * d + j];
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = 0;
  for (T v : x.data()) acc += v;
  Node<T>* xn = node_of(x);
  return detail::make_op<T>({1}, {acc}, {&x}, [xn](Node<T>& self) {
    const T g = self.grad[0];
    for (auto& v : xn->grad) v += g;
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.size()));
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw DimensionError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  Node<T>* xn = node_of(x);
  return detail::make_op<T>(std::move(shape), std::move(out), {&x},
                            [xn](Node<T>& self) { detail::accumulate<T>(*xn, self.grad); });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t start, std::size_t count) {
  require_rank(x, 2, "slice_rows");
  const std::size_t cols = x.dim(1);
  if (count == 0 || start + count > x.dim(0)) throw DimensionError("slice_rows: range out of bounds");
  std::vector<T> out(x.data().begin() + static_cast<std::ptrdiff_t>(start * cols),
                     x.data().begin() + static_cast<std::ptrdiff_t>((start + count) * cols));
  Node<T>* xn = node_of(x);
  return detail::make_op<T>({count, cols}, std::move(out), {&x}, [xn, start, cols](Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[start * cols + i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t start, std::size_t count) {
  require_rank(x, 2, "slice_cols");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (count == 0 || start + count > cols) throw DimensionError("slice_cols: range out of bounds");
  std::vector<T> out(rows * count);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < count; ++j) out[r * count + j] = x.data()[r * cols + start + j];
  Node<T>* xn = node_of(x);
  return detail::make_op<T>({rows, count}, std::move(out), {&x}, [xn, rows, cols, start, count](Node<T>& self) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < count; ++j) xn->grad[r * cols + start + j] += self.grad[r * count + j];
  });
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t cols = parts.front().dim(1);
  std::size_t rows = 0;
  std::vector<T> out;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_rows");
    if (p.dim(1) != cols) throw DimensionError("concat_rows: column mismatch");
    rows += p.dim(0);
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  std::vector<Node<T>*> nodes;
  for (const auto& p : parts) nodes.push_back(p.node().get());
  return detail::make_op<T>({rows, cols}, std::move(out), parts, [nodes](Node<T>& self) {
    std::size_t offset = 0;
    for (Node<T>* n : nodes) {
      if (n->requires_grad)
        for (std::size_t i = 0; i < n->data.size(); ++i) n->grad[i] += self.grad[offset + i];
      offset += n->data.size();
    }
  });
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t rows = parts.front().dim(0);
  std::size_t cols = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.dim(0) != rows) throw DimensionError("concat_cols: row mismatch");
    cols += p.dim(1);
  }
  std::vector<T> out(rows * cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t pc = p.dim(1);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < pc; ++j) out[r * cols + offset + j] = p.data()[r * pc + j];
    offset += pc;
  }
  std::vector<Node<T>*> nodes;
  for (const auto& p : parts) nodes.push_back(p.node().get());
  return detail::make_op<T>({rows, cols}, std::move(out), parts, [nodes, rows, cols](Node<T>& self) {
    std::size_t off = 0;
    for (Node<T>* n : nodes) {
      const std::size_t pc = n->shape[1];
      if (n->requires_grad)
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < pc; ++j) n->grad[r * pc + j] += self.grad[r * cols + off + j];
      off += pc;
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const std::size_t d = x.shape().back();
  if (gamma.size() != d || beta.size() != d) throw DimensionError("layer_norm: affine size mismatch");
  const std::size_t rows = x.size() / d;
  std::vector<T> out(x.size()), xhat(x.size()), rstd(rows);
  auto xs = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += xs[r * d + j];
    mu /= static_cast<double>(d);
    double var = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xs[r * d + j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + static_cast<double>(eps));
    rstd[r] = static_cast<T>(rs);
    for (std::size_t j = 0; j < d; ++j) {
      const T h = static_cast<T>((xs[r * d + j] - mu) * rs);
      xhat[r * d + j] = h;
      out[r * d + j] = gamma.data()[j] * h + beta.data()[j];
    }
  }
  Node<T>* xn = node_of(x);
  Node<T>* gn = node_of(gamma);
  Node<T>* bn = node_of(beta);
  return detail::make_op<T>(
      x.shape(), std::move(out), {&x, &gamma, &beta},
      [xn, gn, bn, rows, d, xhat = std::move(xhat), rstd = std::move(rstd)](Node<T>& self) {
        for (std::size_t r = 0; r < rows; ++r) {
          const T* dy = self.grad.data() + r * d;
          const T* h = xhat.data() + r * d;
          if (gn->requires_grad)
            for (std::size_t j = 0; j < d; ++j) gn->grad[j] += dy[j] * h[j];
          if (bn->requires_grad)
            for (std::size_t j = 0; j < d; ++j) bn->grad[j] += dy[j];
          if (xn->requires_grad) {
            double mean_g = 0, mean_gh = 0;
            for (std::size_t j = 0; j < d; ++j) {
              const double g = static_cast<double>(dy[j]) * gn->data[j];
              mean_g += g;
              mean_gh += g * h[j];
            }
            mean_g /= static_cast<double>(d);
            mean_gh /= static_cast<double>(d);
            for (std::size_t j = 0; j < d; ++j) {
              const double g = static_cast<double>(dy[j]) * gn->data[j];
              xn->grad[r * d + j] += static_cast<T>(rstd[r] * (g - mean_g - h[j] * mean_gh));
            }
          }
        }
      });
}

namespace {

template <typename T>
Tensor<T> softmax_impl(const Tensor<T>& x, bool causal) {
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.size() / n;
  if (causal && (x.rank() != 2 || rows != n)) throw DimensionError("causal_softmax: expects a square matrix");
  std::vector<T> out(x.size(), T(0));
  auto xs = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t len = causal ? r + 1 : n;
    const T* row = xs.data() + r * n;
    T mx = row[0];
    for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, row[j]);
    T total = 0;
    for (std::size_t j = 0; j < len; ++j) {
      out[r * n + j] = std::exp(row[j] - mx);
      total += out[r * n + j];
    }
    for (std::size_t j = 0; j < len; ++j) out[r * n + j] /= total;
  }
  Node<T>* xn = node_of(x);
  return detail::make_op<T>(x.shape(), std::move(out), {&x}, [xn, rows, n](Node<T>& self) {
    for (std::size_t r = 0; r < rows; ++r) {
      const T* y = self.data.data() + r * n;
      const T* dy = self.grad.data() + r * n;
      T dot = 0;
      for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) xn->grad[r * n + j] += y[j] * (dy[j] - dot);
    }
  });
}

template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary(const Tensor<T>& x, Fwd fwd, Deriv deriv) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x.data()[i]);
  Node<T>* xn = node_of(x);
  return detail::make_op<T>(x.shape(), std::move(out), {&x}, [xn, deriv](Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i] * deriv(xn->data[i]);
  });
}

}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  return softmax_impl(x, false);
}

template <typename T>
Tensor<T> causal_softmax(const Tensor<T>& x) {
  return softmax_impl(x, true);
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  constexpr T a = static_cast<T>(0.044715);
  return unary(
      x, [](T v) { return T(0.5) * v * (T(1) + std::tanh(c * (v + a * v * v * v))); },
      [](T v) {
        const T t = std::tanh(c * (v + a * v * v * v));
        return T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * c * (T(1) + T(3) * a * v * v);
      });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary(
      x, [](T v) { return v > T(0) ? v : T(0); }, [](T v) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> softplus(const Tensor<T>& x) {
  return unary(
      x, [](T v) { return v > T(0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](T v) {
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      });
}

template <typename T>
Tensor<T> film(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta) {
  require_rank(x, 2, "film");
  const std::size_t rows = x.dim(0), d = x.dim(1);
  if (gamma.size() != d || beta.size() != d) {
    throw DimensionError("film: modulation length differs from width " + std::to_string(d));
  }
  std::vector<T> out(x.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = gamma.data()[j] * x.data()[r * d + j] + beta.data()[j];
  Node<T>* xn = node_of(x);
  Node<T>* gn = node_of(gamma);
  Node<T>* bn = node_of(beta);
  return detail::make_op<T>(x.shape(), std::move(out), {&x, &gamma, &beta}, [xn, gn, bn, rows, d](Node<T>& self) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < d; ++j) {
        const T g = self.grad[r * d + j];
        if (xn->requires_grad) xn->grad[r * d + j] += g * gn->data[j];
        if (gn->requires_grad) gn->grad[j] += g * xn->data[r * d + j];
        if (bn->requires_grad) bn->grad[j] += g;
      }
    }
  });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, std::size_t stride,
                 std::size_t padding) {
  require_rank(x, 3, "conv2d");
  require_rank(w, 4, "conv2d");
  if (stride == 0) throw DimensionError("conv2d: stride must be positive");
  const std::size_t kernel = w.dim(2);
  if (w.dim(1) != x.dim(0) || w.dim(3) != kernel) {
    throw DimensionError("conv2d: weight " + to_string(w.shape()) + " incompatible with input " +
                         to_string(x.shape()));
  }
  if (bias.defined() && bias.size() != w.dim(0)) throw DimensionError("conv2d: bias length mismatch");
  if (x.dim(1) + 2 * padding < kernel || x.dim(2) + 2 * padding < kernel) {
    throw DimensionError("conv2d: kernel larger than padded input " + to_string(x.shape()));
  }
  kernels::ConvGeometry g;
  g.in_channels = x.dim(0);
  g.in_h = x.dim(1);
  g.in_w = x.dim(2);
  g.out_channels = w.dim(0);
  g.kernel = kernel;
  g.stride = stride;
  g.padding = padding;
  g.out_h = (g.in_h + 2 * padding - kernel) / stride + 1;
  g.out_w = (g.in_w + 2 * padding - kernel) / stride + 1;
  std::vector<T> out(g.out_channels * g.out_h * g.out_w);
  const std::span<const T> b = bias.defined() ? bias.data() : std::span<const T>{};
  k::conv2d<T>(x.data(), w.data(), b, out, g);

  Node<T>* xn = node_of(x);
  Node<T>* wn = node_of(w);
  Node<T>* bn = node_of(bias);
  return detail::make_op<T>({g.out_channels, g.out_h, g.out_w}, std::move(out), {&x, &w, &bias},
                            [xn, wn, bn, g](Node<T>& self) {
                              if (xn->requires_grad) {
                                kernels::ConvGeometry t = g;
                                std::swap(t.in_channels, t.out_channels);
                                std::swap(t.in_h, t.out_h);
                                std::swap(t.in_w, t.out_w);
                                std::vector<T> dx(xn->data.size());
                                k::conv_transpose2d<T>(self.grad, wn->data, {}, dx, t);
                                detail::accumulate<T>(*xn, dx);
                              }
                              const bool need_w = wn->requires_grad;
                              const bool need_b = wants_grad(bn);
                              if (need_w || need_b) {
                                std::vector<T> dw(wn->data.size());
                                std::vector<T> db(need_b ? g.out_channels : 0);
                                k::conv2d_weight_grad<T>(xn->data, self.grad, dw, db, g);
                                if (need_w) detail::accumulate<T>(*wn, dw);
                                if (need_b) detail::accumulate<T>(*bn, db);
                              }
                            });
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, std::size_t stride,
                           std::size_t padding) {
  require_rank(x, 3, "conv_transpose2d");
  require_rank(w, 4, "conv_transpose2d");
  if (stride == 0) throw DimensionError("conv_transpose2d: stride must be positive");
  const std::size_t kernel = w.dim(2);
  if (w.dim(0) != x.dim(0) || w.dim(3) != kernel) {
    throw DimensionError("conv_transpose2d: weight " + to_string(w.shape()) + " incompatible with input " +
                         to_string(x.shape()));
  }
  if (bias.defined() && bias.size() != w.dim(1)) throw DimensionError("conv_transpose2d: bias length mismatch");
  const auto out_side = [&](std::size_t in) {
    const auto v = static_cast<std::ptrdiff_t>((in - 1) * stride + kernel) - static_cast<std::ptrdiff_t>(2 * padding);
    if (v <= 0) throw DimensionError("conv_transpose2d: non-positive output size");
    return static_cast<std::size_t>(v);
  };
  kernels::ConvGeometry g;
  g.in_channels = x.dim(0);
  g.in_h = x.dim(1);
  g.in_w = x.dim(2);
  g.out_channels = w.dim(1);
  g.kernel = kernel;
  g.stride = stride;
  g.padding = padding;
  g.out_h = out_side(g.in_h);
  g.out_w = out_side(g.in_w);
  std::vector<T> out(g.out_channels * g.out_h * g.out_w);
  const std::span<const T> b = bias.defined() ? bias.data() : std::span<const T>{};
  k::conv_transpose2d<T>(x.data(), w.data(), b, out, g);

  Node<T>* xn = node_of(x);
  Node<T>* wn = node_of(w);
  Node<T>* bn = node_of(bias);
  return detail::make_op<T>({g.out_channels, g.out_h, g.out_w}, std::move(out), {&x, &w, &bias},
                            [xn, wn, bn, g](Node<T>& self) {
                              if (xn->requires_grad) {
                                kernels::ConvGeometry t = g;
                                std::swap(t.in_channels, t.out_channels);
                                std::swap(t.in_h, t.out_h);
                                std::swap(t.in_w, t.out_w);
                                std::vector<T> dx(xn->data.size());
                                k::conv2d<T>(self.grad, wn->data, {}, dx, t);
                                detail::accumulate<T>(*xn, dx);
                              }
                              const bool need_w = wn->requires_grad;
                              const bool need_b = wants_grad(bn);
                              if (need_w || need_b) {
                                std::vector<T> dw(wn->data.size());
                                std::vector<T> db(need_b ? g.out_channels : 0);
                                k::conv_transpose2d_weight_grad<T>(xn->data, self.grad, dw, db, g);
                                if (need_w) detail::accumulate<T>(*wn, dw);
                                if (need_b) detail::accumulate<T>(*bn, db);
                              }
                            });
}

template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, std::size_t target_h, std::size_t target_w) {
  require_rank(x, 3, "bilinear_resize");
  if (target_h == 0 || target_w == 0) throw DimensionError("bilinear_resize: target must be positive");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Node<T>* xn = node_of(x);
  if (h == target_h && w == target_w) {
    std::vector<T> out(x.data().begin(), x.data().end());
    return detail::make_op<T>(x.shape(), std::move(out), {&x},
                              [xn](Node<T>& self) { detail::accumulate<T>(*xn, self.grad); });
  }
  std::vector<T> out(c * target_h * target_w);
  k::bilinear_resize<T>(x.data(), out, c, h, w, target_h, target_w);
  return detail::make_op<T>(
      {c, target_h, target_w}, std::move(out), {&x}, [xn, c, h, w, target_h, target_w](Node<T>& self) {
        std::vector<kernels::LinearTap> tx(target_w);
        for (std::size_t ox = 0; ox < target_w; ++ox) tx[ox] = kernels::linear_tap(ox, w, target_w);
        for (std::size_t ch = 0; ch < c; ++ch) {
          T* dplane = xn->grad.data() + ch * h * w;
          for (std::size_t oy = 0; oy < target_h; ++oy) {
            const auto ty = kernels::linear_tap(oy, h, target_h);
            const T wy = static_cast<T>(ty.frac);
            for (std::size_t ox = 0; ox < target_w; ++ox) {
              const T wx = static_cast<T>(tx[ox].frac);
              const T g = self.grad[(ch * target_h + oy) * target_w + ox];
              dplane[ty.lo * w + tx[ox].lo] += g * (T(1) - wy) * (T(1) - wx);
              dplane[ty.lo * w + tx[ox].hi] += g * (T(1) - wy) * wx;
              dplane[ty.hi * w + tx[ox].lo] += g * wy * (T(1) - wx);
              dplane[ty.hi * w + tx[ox].hi] += g * wy * wx;
            }
          }
        }
      });
}

#define MD_INSTANTIATE(T)                                                                           \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> transpose(const Tensor<T>&);                                                   \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> scale(const Tensor<T>&, T);                                                    \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> sum(const Tensor<T>&);                                                         \
  template Tensor<T> mean(const Tensor<T>&);                                                        \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                              \
  template Tensor<T> slice_rows(const Tensor<T>&, std::size_t, std::size_t);                        \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);                        \
  template Tensor<T> concat_rows(const std::vector<Tensor<T>>&);                                    \
  template Tensor<T> concat_cols(const std::vector<Tensor<T>>&);                                    \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);           \
  template Tensor<T> softmax(const Tensor<T>&);                                                     \
  template Tensor<T> causal_softmax(const Tensor<T>&);                                              \
  template Tensor<T> gelu(const Tensor<T>&);                                                        \
  template Tensor<T> relu(const Tensor<T>&);                                                        \
  template Tensor<T> softplus(const Tensor<T>&);                                                    \
  template Tensor<T> film(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,      \
                            std::size_t);                                                           \
  template Tensor<T> conv_transpose2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
                                      std::size_t, std::size_t);                                    \
  template Tensor<T> bilinear_resize(const Tensor<T>&, std::size_t, std::size_t);

MD_INSTANTIATE(float)
MD_INSTANTIATE(double)
#undef MD_INSTANTIATE

}  // namespace md
