#include "md/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "md/ops.hpp"
#include "md/rng.hpp"

namespace md {

namespace {
constexpr double kEmbeddingStd = 0.02;
}

void VisionEncoderConfig::validate() const {
  if (patch_size == 0 || image_size == 0 || image_size % patch_size != 0) {
    throw ConfigError("vision: image_size " + std::to_string(image_size) + " not divisible by patch_size " +
                      std::to_string(patch_size));
  }
  if (width == 0 || heads == 0 || width % heads != 0) throw ConfigError("vision: width must be divisible by heads");
  if (layers == 0 || mlp_dim == 0) throw ConfigError("vision: layers and mlp_dim must be positive");
  if (tap_layers.empty()) throw ConfigError("vision: at least one tap layer is required");
  for (std::size_t i = 0; i < tap_layers.size(); ++i) {
    if (tap_layers[i] < 1 || tap_layers[i] > layers) {
      throw ConfigError("vision: tap layer " + std::to_string(tap_layers[i]) + " outside [1, " +
                        std::to_string(layers) + "]");
    }
    if (i > 0 && tap_layers[i] <= tap_layers[i - 1]) throw ConfigError("vision: tap layers must be increasing");
  }
}

VisionEncoderConfig VisionEncoderConfig::paper() { return {}; }

VisionEncoderConfig VisionEncoderConfig::toy() {
  VisionEncoderConfig c;
  c.image_size = 64;
  c.patch_size = 8;
  c.width = 32;
  c.layers = 2;
  c.heads = 4;
  c.mlp_dim = 128;
  c.tap_layers = {1, 2};
  return c;
}

void TextEncoderConfig::validate() const {
  if (width == 0 || heads == 0 || width % heads != 0) throw ConfigError("text: width must be divisible by heads");
  if (layers == 0 || mlp_dim == 0 || proj_dim == 0) throw ConfigError("text: dims must be positive");
  if (max_positions < 3) throw ConfigError("text: max_positions must leave room for BOS, EOS and one token");
}

TextEncoderConfig TextEncoderConfig::paper() { return {}; }

TextEncoderConfig TextEncoderConfig::toy() {
  TextEncoderConfig c;
  c.width = 32;
  c.layers = 2;
  c.heads = 4;
  c.mlp_dim = 128;
  c.max_positions = 16;
  c.proj_dim = 32;
  return c;
}

template <typename T>
VisionEncoder<T>::VisionEncoder(ParamStore<T>& store, const VisionEncoderConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  const InitSpec init{seed, true, 0.0};
  const std::size_t p = config.patch_size, w = config.width;
  patch_weight_ = store.add("vision.patch_embed.weight", {w, 3, p, p},
                            normal_draw(w * 3 * p * p, 1.0 / std::sqrt(3.0 * static_cast<double>(p * p)),
                                        derive_seed(seed, "vision.patch_embed.weight")),
                            true);
  class_token_ =
      store.add("vision.class_token", {1, w}, normal_draw(w, kEmbeddingStd, derive_seed(seed, "vision.class_token")), true);
  const std::size_t positions = config.tokens() + 1;
  positional_ = store.add("vision.positional", {positions, w},
                          normal_draw(positions * w, kEmbeddingStd, derive_seed(seed, "vision.positional")), true);
  ln_pre_ = LayerNorm<T>(store, "vision.ln_pre", w, init);
  const BlockDims dims{w, config.heads, config.mlp_dim, false};
  for (std::size_t l = 0; l < config.layers; ++l) {
    blocks_.emplace_back(store, "vision.block" + std::to_string(l + 1), dims, init);
  }
}

template <typename T>
VisionOutput<T> VisionEncoder<T>::encode(const Tensor<T>& pixels, bool with_final) const {
  const std::size_t s = config_.image_size;
  if (pixels.rank() != 3 || pixels.dim(0) != 3 || pixels.dim(1) != s || pixels.dim(2) != s) {
    throw DimensionError("encode_image: expected [3x" + std::to_string(s) + "x" + std::to_string(s) + "], got " +
                         to_string(pixels.shape()));
  }
  std::vector<T> normalized(pixels.data().begin(), pixels.data().end());
  for (auto& v : normalized) v = (v - T(0.5)) / T(0.5);
  const auto x = Tensor<T>::from(pixels.shape(), std::move(normalized));

  const std::size_t tokens = config_.tokens();
  const Tensor<T> grid = conv2d(x, patch_weight_, Tensor<T>{}, config_.patch_size, 0);
  const Tensor<T> patches = transpose(reshape(grid, {config_.width, tokens}));
  Tensor<T> h = ln_pre_(add(concat_rows<T>({class_token_, patches}), positional_));

  VisionOutput<T> out;
  const std::size_t last = with_final ? config_.layers : config_.tap_layers.back();
  auto next_tap = config_.tap_layers.begin();
  for (std::size_t l = 1; l <= last; ++l) {
    h = blocks_[l - 1](h);
    if (next_tap != config_.tap_layers.end() && *next_tap == l) {
      out.taps.push_back(slice_rows(h, 1, tokens));
      ++next_tap;
    }
  }
  if (with_final) out.final = slice_rows(h, 1, tokens);
  return out;
}

template <typename T>
VisionOutput<T> VisionEncoder<T>::encode(const Image& image, bool with_final) const {
  std::vector<T> data(image.data.begin(), image.data.end());
  return encode(Tensor<T>::from({3, image.height, image.width}, std::move(data)), with_final);
}

template <typename T>
Mirror<T> make_mirror(ParamStore<T>& store, std::size_t tokens, std::size_t width, std::uint64_t seed) {
  Mirror<T> mirror;
  mirror.tokens = tokens;
  mirror.width = width;
  mirror.seed = seed;
  mirror.m = store.add("mirror", {tokens, width}, normal_draw(tokens * width, kMirrorInitStd, derive_seed(seed, "mirror")),
                       false);
  return mirror;
}

template <typename T>
void randomize_mirror(Mirror<T>& mirror, std::uint64_t seed) {
  const auto draw = normal_draw(mirror.m.size(), kMirrorInitStd, derive_seed(seed, "mirror"));
  auto data = mirror.m.mutable_data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<T>(draw[i]);
  mirror.seed = seed;
}

template <typename T>
TextEncoder<T>::TextEncoder(ParamStore<T>& store, const TextEncoderConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  const InitSpec init{seed, true, 0.0};
  const std::size_t w = config.width;
  special_.bos = store.add("text.bos", {1, w}, normal_draw(w, kEmbeddingStd, derive_seed(seed, "text.bos")), true);
  special_.eos = store.add("text.eos", {1, w}, normal_draw(w, kEmbeddingStd, derive_seed(seed, "text.eos")), true);
  special_.positional =
      store.add("text.positional", {config.max_positions, w},
                normal_draw(config.max_positions * w, kEmbeddingStd, derive_seed(seed, "text.positional")), true);
  const BlockDims dims{w, config.heads, config.mlp_dim, true};
  for (std::size_t l = 0; l < config.layers; ++l) {
    blocks_.emplace_back(store, "text.block" + std::to_string(l + 1), dims, init);
  }
  ln_final_ = LayerNorm<T>(store, "text.ln_final", w, init);
  projection_ = store.add("text.projection", {w, config.proj_dim},
                          normal_draw(w * config.proj_dim, 1.0 / std::sqrt(static_cast<double>(w)),
                                      derive_seed(seed, "text.projection")),
                          true);
}

template <typename T>
Tensor<T> TextEncoder<T>::encode_prompt(const Tensor<T>& mirror) const {
  if (mirror.rank() != 2 || mirror.dim(1) != config_.width) {
    throw DimensionError("encode_prompt: mirror must be [s x " + std::to_string(config_.width) + "], got " +
                         to_string(mirror.shape()));
  }
  const std::size_t s = mirror.dim(0);
  const std::size_t length = s + 2;
  if (length > config_.max_positions) {
    throw ConfigError("encode_prompt: sequence of " + std::to_string(length) + " exceeds max_positions " +
                      std::to_string(config_.max_positions));
  }
  Tensor<T> h = add(concat_rows<T>({special_.bos, mirror, special_.eos}), slice_rows(special_.positional, 0, length));
  for (const auto& block : blocks_) h = block(h);
  const Tensor<T> pooled = slice_rows(ln_final_(h), s + 1, 1);
  return reshape(matmul(pooled, projection_), {config_.proj_dim});
}

template <typename T>
FrozenEncoders<T> init_frozen_encoders(ParamStore<T>& store, const VisionEncoderConfig& vision,
                                       const TextEncoderConfig& text, std::uint64_t seed) {
  return {VisionEncoder<T>(store, vision, seed), TextEncoder<T>(store, text, seed)};
}

template class VisionEncoder<float>;
template class VisionEncoder<double>;
template class TextEncoder<float>;
template class TextEncoder<double>;
template Mirror<float> make_mirror(ParamStore<float>&, std::size_t, std::size_t, std::uint64_t);
template Mirror<double> make_mirror(ParamStore<double>&, std::size_t, std::size_t, std::uint64_t);
template void randomize_mirror(Mirror<float>&, std::uint64_t);
template void randomize_mirror(Mirror<double>&, std::uint64_t);
template FrozenEncoders<float> init_frozen_encoders(ParamStore<float>&, const VisionEncoderConfig&,
                                                    const TextEncoderConfig&, std::uint64_t);
template FrozenEncoders<double> init_frozen_encoders(ParamStore<double>&, const VisionEncoderConfig&,
                                                     const TextEncoderConfig&, std::uint64_t);

}  // namespace md
