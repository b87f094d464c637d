#pragma once

// Differentiable primitives. Shapes must match exactly; the only broadcast is
// a trailing-dimension vector (bias, FiLM scale/shift) applied to every row.

#include <vector>

#include "md/tensor.hpp"

namespace md {

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> transpose(const Tensor<T>& a);

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
/// x[..., d] + b[d]
template <typename T> Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& b);

/// Scalar (shape [1]) reductions.
template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);

template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T> Tensor<T> slice_rows(const Tensor<T>& x, std::size_t start, std::size_t count);
template <typename T> Tensor<T> slice_cols(const Tensor<T>& x, std::size_t start, std::size_t count);
template <typename T> Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts);

/// Normalizes over the last axis, then applies gamma/beta of length d.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps);

/// Softmax over the last axis with max subtraction.
template <typename T> Tensor<T> softmax(const Tensor<T>& x);
/// Row i of a square score matrix only sees columns 0..i.
template <typename T> Tensor<T> causal_softmax(const Tensor<T>& x);

/// tanh approximation: 0.5x(1 + tanh(sqrt(2/pi)(x + 0.044715x^3))).
template <typename T> Tensor<T> gelu(const Tensor<T>& x);
template <typename T> Tensor<T> relu(const Tensor<T>& x);
/// log(1 + e^x), evaluated as x + log1p(e^-x) for x > 0.
template <typename T> Tensor<T> softplus(const Tensor<T>& x);

/// gamma[d] ⊙ x[n×d] + beta[d], rows broadcast.
template <typename T>
Tensor<T> film(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta);

/// x[C_in×H×W], w[C_out×C_in×k×k], optional bias[C_out] (pass an undefined tensor to skip).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, std::size_t stride,
                 std::size_t padding);

/// x[C_in×H×W], w[C_in×C_out×k×k]; output side (H−1)·s − 2p + k.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, std::size_t stride,
                           std::size_t padding);

/// Bilinear, align_corners=false. Same-size requests return an exact copy.
template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, std::size_t target_h, std::size_t target_w);

}  // namespace md
