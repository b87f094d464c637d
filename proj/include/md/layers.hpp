#pragma once

#include <string>

#include "md/param.hpp"

namespace md {

/// How a layer's weights are drawn at construction.
struct InitSpec {
  std::uint64_t seed = 0;
  bool frozen = false;
  /// Linear/conv weights: normal with this stddev, or 1/sqrt(fan_in) when <= 0.
  double weight_std = 0.02;
};

template <typename T>
struct Linear {
  Tensor<T> weight;  // [in × out]
  Tensor<T> bias;    // [out]

  Linear() = default;
  Linear(ParamStore<T>& store, const std::string& name, std::size_t in, std::size_t out, const InitSpec& init,
         double bias_value = 0.0);

  /// x[n × in] → [n × out]
  Tensor<T> operator()(const Tensor<T>& x) const;
};

template <typename T>
struct LayerNorm {
  Tensor<T> gamma, beta;
  T eps = static_cast<T>(1e-5);

  LayerNorm() = default;
  LayerNorm(ParamStore<T>& store, const std::string& name, std::size_t width, const InitSpec& init);
  Tensor<T> operator()(const Tensor<T>& x) const;
};

struct BlockDims {
  std::size_t width = 0;
  std::size_t heads = 1;
  std::size_t mlp_dim = 0;
  bool causal = false;
};

/// Pre-norm transformer block: x + MHA(LN(x)), then x + MLP(LN(x)) with GELU.
template <typename T>
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(ParamStore<T>& store, const std::string& prefix, const BlockDims& dims, const InitSpec& init);

  /// x[tokens × width]
  Tensor<T> operator()(const Tensor<T>& x) const;

  /// Learnable scalars per block for the given dims.
  static std::size_t parameter_count(const BlockDims& dims);

 private:
  BlockDims dims_;
  LayerNorm<T> ln_attn_, ln_mlp_;
  Linear<T> qkv_, out_, fc1_, fc2_;
};

extern template struct Linear<float>;
extern template struct Linear<double>;
extern template struct LayerNorm<float>;
extern template struct LayerNorm<double>;
extern template class TransformerBlock<float>;
extern template class TransformerBlock<double>;

}  // namespace md
