#include "md/model.hpp"

#include "md/rng.hpp"

namespace md {

void ModelConfig::validate() const {
  vision.validate();
  text.validate();
  decoder.validate(vision.tap_layers.size());
  if (mirror_tokens == 0) throw ConfigError("mirror.tokens must be positive");
  if (mirror_tokens + 2 > text.max_positions) {
    throw ConfigError("mirror.tokens " + std::to_string(mirror_tokens) + " plus BOS/EOS exceeds text.max_positions " +
                      std::to_string(text.max_positions));
  }
  if (decoder.proj_in_dim != vision.width) throw ConfigError("decoder.proj_in_dim must equal vision.width");
  if (decoder.cond_dim != text.proj_dim) throw ConfigError("decoder.cond_dim must equal text.proj_dim");
}

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.vision = VisionEncoderConfig::paper();
  c.text = TextEncoderConfig::paper();
  c.mirror_tokens = 64;
  c.decoder = DecoderConfig::paper();
  return c;
}

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.vision = VisionEncoderConfig::toy();
  c.text = TextEncoderConfig::toy();
  c.mirror_tokens = 8;
  c.decoder = DecoderConfig::toy();
  return c;
}

namespace {
ModelConfig checked(const ModelConfig& config) {
  config.validate();
  return config;
}
}  // namespace

template <typename T>
DepthModel<T>::DepthModel(const ModelConfig& config) : config_(checked(config)) {
  encoders_ = init_frozen_encoders(store_, config.vision, config.text, derive_seed(config.seed, "encoders"));
  mirror_ = make_mirror(store_, config.mirror_tokens, config.text.width, derive_seed(config.seed, "mirror"));
  decoder_ = DenseDecoder<T>(store_, config.decoder, config.vision.tap_layers.size(),
                             InitSpec{derive_seed(config.seed, "decoder"), false, 0.02});
}

template <typename T>
std::vector<Tensor<T>> DepthModel<T>::image_taps(const Image& image) const {
  NoGradGuard guard;
  return encoders_.vision.encode(image, false).taps;
}

template <typename T>
Tensor<T> DepthModel<T>::condition() const {
  return encoders_.text.encode_prompt(mirror_.m);
}

template <typename T>
Tensor<T> DepthModel<T>::logits(const std::vector<Tensor<T>>& taps, const Tensor<T>& cond) const {
  return decoder_.decode(taps, cond);
}

template <typename T>
DepthMap DepthModel<T>::infer(const Image& image) const {
  NoGradGuard guard;
  const std::size_t s = config_.vision.image_size;
  const auto taps = image_taps(resize_image(image, s, s));
  return predict_depth(logits(taps, condition()), image.height, image.width);
}

template class DepthModel<float>;
template class DepthModel<double>;

}  // namespace md
