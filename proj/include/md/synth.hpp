#pragma once

#include <cstdint>
#include <vector>

#include "md/camera.hpp"

namespace md {

/// Fronto-parallel rectangle lying in the world plane Z = distance.
struct SceneObject {
  double center_x = 0.0, center_y = 0.0;  // world meters
  double half_width = 0.5, half_height = 0.5;
  double distance = 5.0;
  int pattern = 1;
  ObjectClass label = ObjectClass::car;

  double height() const { return 2.0 * half_height; }
};

struct SceneSpec {
  std::uint64_t seed = 0;
  std::size_t height = 64, width = 64;
  double background_depth = 9.0;
  std::vector<SceneObject> objects;
  std::vector<Pose> trajectory{Pose::identity()};  // world → camera per frame
  Intrinsics intrinsics{64.0, 64.0, 32.0, 32.0};
};

struct RenderStats {
  std::size_t skipped_objects = 0;  // behind the camera
};

/// Ray-casts every pixel against the objects and the background plane; the
/// nearest hit sets depth (camera z) and colour. Boxes bound visible pixels.
Frame render_scene(const SceneSpec& spec, std::size_t pose_index, RenderStats* stats = nullptr);

std::vector<Frame> make_sequence(const SceneSpec& spec);

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t scenes = 4;
  std::size_t frames_per_scene = 4;
  std::size_t height = 64, width = 64;
  std::size_t min_objects = 2, max_objects = 4;
  double forward_step = 0.15;  // meters per frame
  double lateral_step = 0.05;
  double yaw_step = 0.0;       // radians per frame
};

/// Random scene with objects in [1.5, 7] m and background in [8, 9.5] m.
SceneSpec random_scene(const SynthConfig& config, std::size_t scene_index);

/// Scenes rendered back to back; box frame ids index the returned list.
std::vector<Frame> make_dataset(const SynthConfig& config);

}  // namespace md
