#include "md/layers.hpp"

#include <cmath>

#include "md/ops.hpp"
#include "md/rng.hpp"

namespace md {

namespace {
double weight_stddev(const InitSpec& init, std::size_t fan_in) {
  return init.weight_std > 0.0 ? init.weight_std : 1.0 / std::sqrt(static_cast<double>(fan_in));
}
}  // namespace

template <typename T>
Linear<T>::Linear(ParamStore<T>& store, const std::string& name, std::size_t in, std::size_t out,
                  const InitSpec& init, double bias_value) {
  const std::string wname = name + ".weight";
  weight = store.add(wname, {in, out}, normal_draw(in * out, weight_stddev(init, in), derive_seed(init.seed, wname)),
                     init.frozen);
  bias = store.add(name + ".bias", {out}, std::vector<double>(out, bias_value), init.frozen);
}

template <typename T>
Tensor<T> Linear<T>::operator()(const Tensor<T>& x) const {
  return add_bias(matmul(x, weight), bias);
}

template <typename T>
LayerNorm<T>::LayerNorm(ParamStore<T>& store, const std::string& name, std::size_t width, const InitSpec& init) {
  gamma = store.add(name + ".gamma", {width}, std::vector<double>(width, 1.0), init.frozen);
  beta = store.add(name + ".beta", {width}, std::vector<double>(width, 0.0), init.frozen);
}

template <typename T>
Tensor<T> LayerNorm<T>::operator()(const Tensor<T>& x) const {
  return layer_norm(x, gamma, beta, eps);
}

template <typename T>
TransformerBlock<T>::TransformerBlock(ParamStore<T>& store, const std::string& prefix, const BlockDims& dims,
                                      const InitSpec& init)
    : dims_(dims) {
  if (dims.width == 0 || dims.heads == 0 || dims.width % dims.heads != 0) {
    throw ContractError(prefix + ": width " + std::to_string(dims.width) + " not divisible by heads " +
                        std::to_string(dims.heads));
  }
  ln_attn_ = LayerNorm<T>(store, prefix + ".ln_attn", dims.width, init);
  qkv_ = Linear<T>(store, prefix + ".attn.qkv", dims.width, 3 * dims.width, init);
  out_ = Linear<T>(store, prefix + ".attn.out", dims.width, dims.width, init);
  ln_mlp_ = LayerNorm<T>(store, prefix + ".ln_mlp", dims.width, init);
  fc1_ = Linear<T>(store, prefix + ".mlp.fc1", dims.width, dims.mlp_dim, init);
  fc2_ = Linear<T>(store, prefix + ".mlp.fc2", dims.mlp_dim, dims.width, init);
}

template <typename T>
Tensor<T> TransformerBlock<T>::operator()(const Tensor<T>& x) const {
  const std::size_t d = dims_.width;
  const std::size_t dh = d / dims_.heads;
  const T scale_factor = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  const Tensor<T> qkv = qkv_(ln_attn_(x));
  std::vector<Tensor<T>> heads;
  heads.reserve(dims_.heads);
  for (std::size_t h = 0; h < dims_.heads; ++h) {
    const Tensor<T> q = slice_cols(qkv, h * dh, dh);
    const Tensor<T> k = slice_cols(qkv, d + h * dh, dh);
    const Tensor<T> v = slice_cols(qkv, 2 * d + h * dh, dh);
    const Tensor<T> scores = scale(matmul(q, transpose(k)), scale_factor);
    const Tensor<T> weights = dims_.causal ? causal_softmax(scores) : softmax(scores);
    heads.push_back(matmul(weights, v));
  }
  const Tensor<T> attended = add(x, out_(heads.size() == 1 ? heads.front() : concat_cols(heads)));
  return add(attended, fc2_(gelu(fc1_(ln_mlp_(attended)))));
}

template <typename T>
std::size_t TransformerBlock<T>::parameter_count(const BlockDims& dims) {
  const std::size_t d = dims.width, m = dims.mlp_dim;
  return 2 * d                // ln_attn
         + d * 3 * d + 3 * d  // qkv
         + d * d + d          // out
         + 2 * d              // ln_mlp
         + d * m + m          // fc1
         + m * d + d;         // fc2
}

template struct Linear<float>;
template struct Linear<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template class TransformerBlock<float>;
template class TransformerBlock<double>;

}  // namespace md
