#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace md {

/// Planar RGB image, channel-major [3 × height × width], values in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;

  Image() = default;
  Image(std::size_t h, std::size_t w) : height(h), width(w), data(3 * h * w, 0.0f) {}

  float& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
  float at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }

  bool operator==(const Image&) const = default;
};

/// Per-pixel depth in meters with a validity mask.
struct DepthMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> depth;
  std::vector<std::uint8_t> valid;

  DepthMap() = default;
  DepthMap(std::size_t h, std::size_t w, float value = 0.0f, bool is_valid = true)
      : height(h), width(w), depth(h * w, value), valid(h * w, is_valid ? 1 : 0) {}

  std::size_t size() const { return depth.size(); }
  float& at(std::size_t y, std::size_t x) { return depth[y * width + x]; }
  float at(std::size_t y, std::size_t x) const { return depth[y * width + x]; }
  bool is_valid(std::size_t y, std::size_t x) const { return valid[y * width + x] != 0; }

  bool operator==(const DepthMap&) const = default;
};

/// Bilinear (align_corners=false) resample of every channel.
Image resize_image(const Image& image, std::size_t height, std::size_t width);

}  // namespace md
