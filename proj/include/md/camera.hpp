#pragma once

#include <array>
#include <string>
#include <vector>

#include "md/image.hpp"

namespace md {

struct Intrinsics {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;

  void validate(std::size_t height, std::size_t width) const;
  bool operator==(const Intrinsics&) const = default;
};

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

/// Rigid motion X' = R X + t. A frame's pose maps world points into its camera;
/// a relative pose maps camera t into camera t+1.
struct Pose {
  Mat3 rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
  Vec3 translation{0, 0, 0};

  static Pose identity() { return {}; }
  static Pose from_axis_angle(const Vec3& axis, double angle, const Vec3& translation);

  Vec3 apply(const Vec3& x) const;
  Pose inverse() const;
  /// (this ∘ other)(x) = this(other(x)).
  Pose compose(const Pose& other) const;
  /// Throws ContractError unless R is orthonormal with det 1 (tolerance 1e-6).
  void validate() const;

  bool operator==(const Pose&) const = default;
};

/// Motion from camera a into camera b, given world→camera poses of both.
Pose relative_pose(const Pose& world_to_a, const Pose& world_to_b);

enum class ObjectClass { car, cyclist, pedestrian };

std::string to_string(ObjectClass c);
ObjectClass parse_object_class(const std::string& text);

/// Pixel rectangle [x0, x1) × [y0, y1).
struct BBox {
  std::size_t frame_id = 0;
  ObjectClass label = ObjectClass::car;
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double object_height = 0.0;

  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool operator==(const BBox&) const = default;
};

struct Frame {
  Image rgb;
  DepthMap depth;
  Pose pose;
  Intrinsics intrinsics;
  std::vector<BBox> boxes;
  std::size_t scene = 0;  // frames of one trajectory share an id

  bool operator==(const Frame&) const = default;
};

}  // namespace md
