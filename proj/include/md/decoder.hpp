#pragma once

#include <string>
#include <vector>

#include "md/image.hpp"
#include "md/layers.hpp"

namespace md {

enum class Conditioning { film, similarity };

Conditioning parse_conditioning(const std::string& text);
std::string to_string(Conditioning conditioning);

struct DecoderConfig {
  std::size_t width = 64;
  std::size_t blocks = 3;
  std::size_t heads = 4;
  std::size_t mlp_dim = 2048;
  std::size_t film_count = 2;
  std::size_t proj_in_dim = 768;
  std::size_t cond_dim = 512;
  std::size_t deconv_mid = 32;
  /// Stddev multiplier for the frozen FiLM nets (base 1/sqrt(cond_dim)).
  double film_gain = 1.0;
  Conditioning conditioning = Conditioning::film;

  /// taps: number of encoder tap layers feeding the skip projections.
  void validate(std::size_t taps) const;

  static DecoderConfig paper();
  static DecoderConfig toy();
};

/// One FiLM layer: frozen affine nets cond → width for the scale and the shift.
template <typename T>
struct FiLMParams {
  Linear<T> gamma_net;
  Linear<T> beta_net;
};

/// gamma_net(cond) ⊙ a + beta_net(cond), broadcast over tokens. cond: [cond_dim].
template <typename T>
Tensor<T> film_modulate(const Tensor<T>& activation, const Tensor<T>& cond, const FiLMParams<T>& film);

/// a + s ⊗ q with q = beta_net(cond) and s_t = <a_t, q> / sqrt(width).
template <typename T>
Tensor<T> similarity_modulate(const Tensor<T>& activation, const Tensor<T>& cond, const FiLMParams<T>& film);

template <typename T>
class DenseDecoder {
 public:
  DenseDecoder() = default;
  DenseDecoder(ParamStore<T>& store, const DecoderConfig& config, std::size_t taps, const InitSpec& init);

  /// hiddens in tap order (shallowest first), each [g² × proj_in_dim]; returns [1 × 16g × 16g].
  Tensor<T> decode(const std::vector<Tensor<T>>& hiddens, const Tensor<T>& cond) const;

  const DecoderConfig& config() const { return config_; }
  const std::vector<FiLMParams<T>>& films() const { return films_; }

 private:
  Tensor<T> condition(const Tensor<T>& a, const Tensor<T>& cond, std::size_t index) const;

  DecoderConfig config_;
  std::vector<Linear<T>> projections_;  // projections_[i] consumes hiddens[i]
  std::vector<FiLMParams<T>> films_;
  std::vector<TransformerBlock<T>> blocks_;
  Tensor<T> conv_w_, conv_b_;
  Tensor<T> deconv1_w_, deconv1_b_;
  Tensor<T> deconv2_w_, deconv2_b_;
};

/// softplus, then bilinear resize to the target. Values are strictly positive.
template <typename T>
Tensor<T> depth_from_logits(const Tensor<T>& logits, std::size_t target_h, std::size_t target_w);

template <typename T>
DepthMap predict_depth(const Tensor<T>& logits, std::size_t target_h, std::size_t target_w);

template <typename T>
std::size_t count_learnable_params(const ParamStore<T>& store) {
  return store.trainable_count();
}

/// Closed form of the trainable decoder scalars (FiLM nets excluded).
std::size_t decoder_trainable_count(const DecoderConfig& config, std::size_t taps);

}  // namespace md
