#pragma once

#include <vector>

#include "md/image.hpp"
#include "md/layers.hpp"

namespace md {

struct VisionEncoderConfig {
  std::size_t image_size = 352;
  std::size_t patch_size = 16;
  std::size_t width = 768;
  std::size_t layers = 12;
  std::size_t heads = 12;
  std::size_t mlp_dim = 3072;
  std::vector<std::size_t> tap_layers{3, 6, 9};  // 1-based block indices

  std::size_t grid() const { return image_size / patch_size; }
  std::size_t tokens() const { return grid() * grid(); }
  void validate() const;

  static VisionEncoderConfig paper();
  static VisionEncoderConfig toy();
};

struct TextEncoderConfig {
  std::size_t width = 512;
  std::size_t layers = 12;
  std::size_t heads = 8;
  std::size_t mlp_dim = 2048;
  std::size_t max_positions = 77;
  std::size_t proj_dim = 512;

  void validate() const;

  static TextEncoderConfig paper();
  static TextEncoderConfig toy();
};

template <typename T>
struct VisionOutput {
  std::vector<Tensor<T>> taps;  // one [tokens × width] per tap layer, in tap order
  Tensor<T> final;              // last block output (patch tokens); undefined if not requested
};

/// Frozen ViT image tower. The class token is internal; outputs carry patch tokens only.
template <typename T>
class VisionEncoder {
 public:
  VisionEncoder() = default;
  VisionEncoder(ParamStore<T>& store, const VisionEncoderConfig& config, std::uint64_t seed);

  /// pixels: [3 × image_size × image_size] in [0, 1]. Normalized here by mean 0.5 / std 0.5.
  VisionOutput<T> encode(const Tensor<T>& pixels, bool with_final = true) const;
  VisionOutput<T> encode(const Image& image, bool with_final = true) const;

  const VisionEncoderConfig& config() const { return config_; }

 private:
  VisionEncoderConfig config_;
  Tensor<T> patch_weight_;  // [width × 3 × p × p], no bias
  Tensor<T> class_token_;   // [1 × width]
  Tensor<T> positional_;    // [(tokens + 1) × width]
  LayerNorm<T> ln_pre_;
  std::vector<TransformerBlock<T>> blocks_;
};

/// BOS/EOS embeddings and the positional table of the text tower.
template <typename T>
struct SpecialTokens {
  Tensor<T> bos;         // [1 × width]
  Tensor<T> eos;         // [1 × width]
  Tensor<T> positional;  // [max_positions × width]
};

/// Learnable prompt matrix fed to the text tower in place of word embeddings.
template <typename T>
struct Mirror {
  Tensor<T> m;  // [tokens × width]
  std::size_t tokens = 0;
  std::size_t width = 0;
  std::uint64_t seed = 0;
};

inline constexpr double kMirrorInitStd = 0.02;

template <typename T>
Mirror<T> make_mirror(ParamStore<T>& store, std::size_t tokens, std::size_t width, std::uint64_t seed);

/// Fresh normal(0, 0.02) draw written in place; shape is unchanged.
template <typename T>
void randomize_mirror(Mirror<T>& mirror, std::uint64_t seed);

/// Frozen causal text tower with eos-pooling and output projection.
template <typename T>
class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(ParamStore<T>& store, const TextEncoderConfig& config, std::uint64_t seed);

  /// [bos; mirror; eos] + positions → blocks → final norm → row s+1 → projection. Returns [proj_dim].
  Tensor<T> encode_prompt(const Tensor<T>& mirror) const;

  const TextEncoderConfig& config() const { return config_; }
  const SpecialTokens<T>& special_tokens() const { return special_; }

 private:
  TextEncoderConfig config_;
  SpecialTokens<T> special_;
  std::vector<TransformerBlock<T>> blocks_;
  LayerNorm<T> ln_final_;
  Tensor<T> projection_;  // [width × proj_dim]
};

template <typename T>
struct FrozenEncoders {
  VisionEncoder<T> vision;
  TextEncoder<T> text;
};

/// Creates both towers with every parameter frozen. Embeddings draw from
/// normal(0, 0.02); linear maps use 1/sqrt(fan_in); norms start at identity.
template <typename T>
FrozenEncoders<T> init_frozen_encoders(ParamStore<T>& store, const VisionEncoderConfig& vision,
                                       const TextEncoderConfig& text, std::uint64_t seed);

/// Convenience wrappers matching the pipeline's vocabulary.
template <typename T>
VisionOutput<T> encode_image(const VisionEncoder<T>& encoder, const Image& image) {
  return encoder.encode(image);
}
template <typename T>
Tensor<T> encode_prompt(const TextEncoder<T>& encoder, const Mirror<T>& mirror) {
  return encoder.encode_prompt(mirror.m);
}

}  // namespace md
