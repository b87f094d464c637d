#pragma once

#include "md/decoder.hpp"
#include "md/encoders.hpp"

namespace md {

struct ModelConfig {
  VisionEncoderConfig vision;
  TextEncoderConfig text;
  std::size_t mirror_tokens = 64;
  DecoderConfig decoder;
  std::uint64_t seed = 0;

  void validate() const;

  static ModelConfig paper();
  static ModelConfig toy();
};

/// Frozen encoders, mirror, and dense decoder sharing one parameter store.
template <typename T>
class DepthModel {
 public:
  explicit DepthModel(const ModelConfig& config);
  DepthModel(const DepthModel&) = delete;
  DepthModel& operator=(const DepthModel&) = delete;
  DepthModel(DepthModel&&) = default;
  DepthModel& operator=(DepthModel&&) = default;

  /// Tap hidden states for an image already at image_size. Never recorded on the tape.
  std::vector<Tensor<T>> image_taps(const Image& image) const;

  /// Conditioning vector [proj_dim] from the current mirror.
  Tensor<T> condition() const;

  /// Logits [1 × 16g × 16g].
  Tensor<T> logits(const std::vector<Tensor<T>>& taps, const Tensor<T>& cond) const;

  /// No-tape forward of any image: resized to image_size on the way in and to
  /// the input's size on the way out.
  DepthMap infer(const Image& image) const;

  const ModelConfig& config() const { return config_; }
  ParamStore<T>& params() { return store_; }
  const ParamStore<T>& params() const { return store_; }
  Mirror<T>& mirror() { return mirror_; }
  const Mirror<T>& mirror() const { return mirror_; }
  const VisionEncoder<T>& vision() const { return encoders_.vision; }
  const TextEncoder<T>& text() const { return encoders_.text; }
  const DenseDecoder<T>& decoder() const { return decoder_; }

 private:
  ModelConfig config_;
  ParamStore<T> store_;
  FrozenEncoders<T> encoders_;
  Mirror<T> mirror_;
  DenseDecoder<T> decoder_;
};

extern template class DepthModel<float>;
extern template class DepthModel<double>;

}  // namespace md
