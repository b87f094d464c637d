#include "md/camera.hpp"

#include <cmath>

#include "md/tensor.hpp"

namespace md {

void Intrinsics::validate(std::size_t height, std::size_t width) const {
  if (!(fx > 0.0 && fy > 0.0)) throw ConfigError("intrinsics: focal lengths must be positive");
  if (!(cx >= 0.0 && cy >= 0.0 && cx <= static_cast<double>(width) && cy <= static_cast<double>(height))) {
    throw ConfigError("intrinsics: principal point outside the image");
  }
}

Pose Pose::from_axis_angle(const Vec3& axis, double angle, const Vec3& translation) {
  const double norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  Pose p;
  p.translation = translation;
  if (norm == 0.0 || angle == 0.0) return p;
  const double x = axis[0] / norm, y = axis[1] / norm, z = axis[2] / norm;
  const double c = std::cos(angle), s = std::sin(angle), C = 1.0 - c;
  p.rotation = {c + x * x * C,     x * y * C - z * s, x * z * C + y * s,
                y * x * C + z * s, c + y * y * C,     y * z * C - x * s,
                z * x * C - y * s, z * y * C + x * s, c + z * z * C};
  return p;
}

Vec3 Pose::apply(const Vec3& x) const {
  const auto& R = rotation;
  return {R[0] * x[0] + R[1] * x[1] + R[2] * x[2] + translation[0],
          R[3] * x[0] + R[4] * x[1] + R[5] * x[2] + translation[1],
          R[6] * x[0] + R[7] * x[1] + R[8] * x[2] + translation[2]};
}

Pose Pose::inverse() const {
  Pose inv;
  const auto& R = rotation;
  inv.rotation = {R[0], R[3], R[6], R[1], R[4], R[7], R[2], R[5], R[8]};
  const auto& Ri = inv.rotation;
  const auto& t = translation;
  inv.translation = {-(Ri[0] * t[0] + Ri[1] * t[1] + Ri[2] * t[2]), -(Ri[3] * t[0] + Ri[4] * t[1] + Ri[5] * t[2]),
                     -(Ri[6] * t[0] + Ri[7] * t[1] + Ri[8] * t[2])};
  return inv;
}

Pose Pose::compose(const Pose& other) const {
  Pose out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += rotation[r * 3 + k] * other.rotation[k * 3 + c];
      out.rotation[r * 3 + c] = acc;
    }
  }
  const Vec3 moved = apply(other.translation);
  out.translation = moved;
  return out;
}

void Pose::validate() const {
  const auto& R = rotation;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += R[k * 3 + a] * R[k * 3 + b];
      if (std::abs(dot - (a == b ? 1.0 : 0.0)) > 1e-6) throw ContractError("pose: rotation is not orthonormal");
    }
  }
  const double det = R[0] * (R[4] * R[8] - R[5] * R[7]) - R[1] * (R[3] * R[8] - R[5] * R[6]) +
                     R[2] * (R[3] * R[7] - R[4] * R[6]);
  if (std::abs(det - 1.0) > 1e-6) throw ContractError("pose: rotation determinant is not 1");
}

Pose relative_pose(const Pose& world_to_a, const Pose& world_to_b) {
  return world_to_b.compose(world_to_a.inverse());
}

std::string to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::car: return "car";
    case ObjectClass::cyclist: return "cyclist";
    case ObjectClass::pedestrian: return "pedestrian";
  }
  return "car";
}

ObjectClass parse_object_class(const std::string& text) {
  if (text == "car") return ObjectClass::car;
  if (text == "cyclist") return ObjectClass::cyclist;
  if (text == "pedestrian") return ObjectClass::pedestrian;
  throw std::invalid_argument("unknown object class '" + text + "'");
}

}  // namespace md
