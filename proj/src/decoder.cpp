#include "md/decoder.hpp"

#include <cmath>

#include "md/ops.hpp"
#include "md/rng.hpp"

namespace md {

namespace {
constexpr std::size_t kDeconvKernel = 4;
constexpr std::size_t kDeconvStride = 4;
}  // namespace

Conditioning parse_conditioning(const std::string& text) {
  if (text == "film") return Conditioning::film;
  if (text == "similarity") return Conditioning::similarity;
  throw ConfigError("unknown conditioning '" + text + "' (expected film or similarity)");
}

std::string to_string(Conditioning conditioning) {
  return conditioning == Conditioning::film ? "film" : "similarity";
}

void DecoderConfig::validate(std::size_t taps) const {
  if (width == 0 || heads == 0 || width % heads != 0) throw ConfigError("decoder: width must be divisible by heads");
  if (taps == 0 || blocks < taps) {
    throw ConfigError("decoder: " + std::to_string(blocks) + " blocks cannot absorb " + std::to_string(taps) + " taps");
  }
  if (film_count > blocks) throw ConfigError("decoder: film_count exceeds block count");
  if (mlp_dim == 0 || proj_in_dim == 0 || cond_dim == 0 || deconv_mid == 0) {
    throw ConfigError("decoder: dims must be positive");
  }
}

DecoderConfig DecoderConfig::paper() { return {}; }

DecoderConfig DecoderConfig::toy() {
  DecoderConfig c;
  c.width = 32;
  c.blocks = 2;
  c.heads = 4;
  c.mlp_dim = 128;
  c.film_count = 2;
  c.proj_in_dim = 32;
  c.cond_dim = 32;
  c.deconv_mid = 32;
  c.film_gain = 0.15;
  return c;
}

template <typename T>
static Tensor<T> as_row(const Tensor<T>& cond) {
  return reshape(cond, {1, cond.size()});
}

template <typename T>
Tensor<T> film_modulate(const Tensor<T>& activation, const Tensor<T>& cond, const FiLMParams<T>& params) {
  const Tensor<T> row = as_row(cond);
  const Tensor<T> gamma = params.gamma_net(row);
  const Tensor<T> beta = params.beta_net(row);
  return film(activation, reshape(gamma, {gamma.size()}), reshape(beta, {beta.size()}));
}

template <typename T>
Tensor<T> similarity_modulate(const Tensor<T>& activation, const Tensor<T>& cond, const FiLMParams<T>& params) {
  const Tensor<T> q = params.beta_net(as_row(cond));
  const T norm = static_cast<T>(1.0 / std::sqrt(static_cast<double>(q.size())));
  const Tensor<T> s = scale(matmul(activation, transpose(q)), norm);
  return add(activation, matmul(s, q));
}

template <typename T>
DenseDecoder<T>::DenseDecoder(ParamStore<T>& store, const DecoderConfig& config, std::size_t taps,
                              const InitSpec& init)
    : config_(config) {
  config.validate(taps);
  const std::size_t w = config.width;
  for (std::size_t i = 0; i < taps; ++i) {
    projections_.emplace_back(store, "decoder.proj" + std::to_string(i + 1), config.proj_in_dim, w, init);
  }
  const InitSpec film_init{init.seed, true, config.film_gain / std::sqrt(static_cast<double>(config.cond_dim))};
  for (std::size_t i = 0; i < config.film_count; ++i) {
    const std::string prefix = "decoder.film" + std::to_string(i + 1);
    films_.push_back({Linear<T>(store, prefix + ".gamma", config.cond_dim, w, film_init, 1.0),
                      Linear<T>(store, prefix + ".beta", config.cond_dim, w, film_init, 0.0)});
  }
  const BlockDims dims{w, config.heads, config.mlp_dim, false};
  for (std::size_t i = 0; i < config.blocks; ++i) {
    blocks_.emplace_back(store, "decoder.block" + std::to_string(i + 1), dims, init);
  }

  auto conv_param = [&](const std::string& name, Shape shape) {
    const std::size_t n = numel(shape);
    return store.add(name, std::move(shape), normal_draw(n, init.weight_std, derive_seed(init.seed, name)),
                     init.frozen);
  };
  auto zero_param = [&](const std::string& name, std::size_t n) {
    return store.add(name, {n}, std::vector<double>(n, 0.0), init.frozen);
  };
  const std::size_t mid = config.deconv_mid;
  conv_w_ = conv_param("decoder.conv.weight", {w, w, 3, 3});
  conv_b_ = zero_param("decoder.conv.bias", w);
  deconv1_w_ = conv_param("decoder.deconv1.weight", {w, mid, kDeconvKernel, kDeconvKernel});
  deconv1_b_ = zero_param("decoder.deconv1.bias", mid);
  deconv2_w_ = conv_param("decoder.deconv2.weight", {mid, 1, kDeconvKernel, kDeconvKernel});
  deconv2_b_ = zero_param("decoder.deconv2.bias", 1);
}

template <typename T>
Tensor<T> DenseDecoder<T>::condition(const Tensor<T>& a, const Tensor<T>& cond, std::size_t index) const {
  return config_.conditioning == Conditioning::film ? film_modulate(a, cond, films_[index])
                                                    : similarity_modulate(a, cond, films_[index]);
}

template <typename T>
Tensor<T> DenseDecoder<T>::decode(const std::vector<Tensor<T>>& hiddens, const Tensor<T>& cond) const {
  const std::size_t taps = projections_.size();
  if (hiddens.size() != taps) {
    throw DimensionError("decode: expected " + std::to_string(taps) + " hidden states, got " +
                         std::to_string(hiddens.size()));
  }
  if (cond.size() != config_.cond_dim) {
    throw DimensionError("decode: cond has " + std::to_string(cond.size()) + " entries, expected " +
                         std::to_string(config_.cond_dim));
  }
  const std::size_t tokens = hiddens.front().dim(0);
  const auto g = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(tokens))));
  if (g * g != tokens) throw DimensionError("decode: token count " + std::to_string(tokens) + " is not square");

  Tensor<T> a;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (i < taps) {
      const std::size_t j = taps - 1 - i;
      const Tensor<T> projected = projections_[j](hiddens[j]);
      a = i == 0 ? projected : add(a, projected);
    }
    if (i < films_.size()) a = condition(a, cond, i);
    a = blocks_[i](a);
  }

  const std::size_t w = config_.width;
  Tensor<T> x = reshape(transpose(a), {w, g, g});
  x = relu(conv2d(x, conv_w_, conv_b_, 1, 1));
  x = relu(conv_transpose2d(x, deconv1_w_, deconv1_b_, kDeconvStride, 0));
  return conv_transpose2d(x, deconv2_w_, deconv2_b_, kDeconvStride, 0);
}

template <typename T>
Tensor<T> depth_from_logits(const Tensor<T>& logits, std::size_t target_h, std::size_t target_w) {
  return bilinear_resize(softplus(logits), target_h, target_w);
}

template <typename T>
DepthMap predict_depth(const Tensor<T>& logits, std::size_t target_h, std::size_t target_w) {
  const Tensor<T> depth = depth_from_logits(logits, target_h, target_w);
  DepthMap out(target_h, target_w);
  for (std::size_t i = 0; i < out.size(); ++i) out.depth[i] = static_cast<float>(depth.data()[i]);
  return out;
}

std::size_t decoder_trainable_count(const DecoderConfig& c, std::size_t taps) {
  const std::size_t w = c.width, mid = c.deconv_mid;
  const std::size_t projections = taps * (c.proj_in_dim * w + w);
  const std::size_t blocks = c.blocks * TransformerBlock<float>::parameter_count({w, c.heads, c.mlp_dim, false});
  const std::size_t deconv = (w * w * 9 + w) + (w * mid * 16 + mid) + (mid * 16 + 1);
  return projections + blocks + deconv;
}

#define MD_INSTANTIATE_DECODER(T)                                                                      \
  template Tensor<T> film_modulate(const Tensor<T>&, const Tensor<T>&, const FiLMParams<T>&);         \
  template Tensor<T> similarity_modulate(const Tensor<T>&, const Tensor<T>&, const FiLMParams<T>&);   \
  template class DenseDecoder<T>;                                                                      \
  template Tensor<T> depth_from_logits(const Tensor<T>&, std::size_t, std::size_t);                   \
  template DepthMap predict_depth(const Tensor<T>&, std::size_t, std::size_t);

MD_INSTANTIATE_DECODER(float)
MD_INSTANTIATE_DECODER(double)

}  // namespace md
