#include "md/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "md/rng.hpp"
#include "md/tensor.hpp"

namespace md {

namespace {

constexpr double kFogDistance = 7.0;
constexpr float kFog[3] = {0.75f, 0.8f, 0.85f};

struct Palette {
  float rgb[3];
  double period;  // checker cell size in meters
};

constexpr Palette kPalettes[] = {
    {{0.45f, 0.42f, 0.38f}, 0.5},  {{0.85f, 0.25f, 0.2f}, 0.15}, {{0.2f, 0.55f, 0.85f}, 0.2},
    {{0.3f, 0.75f, 0.3f}, 0.25},   {{0.9f, 0.8f, 0.2f}, 0.12},   {{0.6f, 0.3f, 0.7f}, 0.3},
};
constexpr int kPaletteCount = static_cast<int>(sizeof(kPalettes) / sizeof(kPalettes[0]));

float quantize(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<float>(std::floor(c * 255.0 + 0.5)) / 255.0f;
}

void shade(Image& img, std::size_t y, std::size_t x, int pattern, double wx, double wy, double depth) {
  const Palette& p = kPalettes[((pattern % kPaletteCount) + kPaletteCount) % kPaletteCount];
  const long cx = static_cast<long>(std::floor(wx / p.period));
  const long cy = static_cast<long>(std::floor(wy / p.period));
  const double checker = ((cx + cy) & 1) ? 1.0 : 0.55;
  const double keep = std::exp(-depth / kFogDistance);
  for (int c = 0; c < 3; ++c) {
    img.at(c, y, x) = quantize(p.rgb[c] * checker * keep + kFog[c] * (1.0 - keep));
  }
}

}  // namespace

Frame render_scene(const SceneSpec& spec, std::size_t pose_index, RenderStats* stats) {
  if (pose_index >= spec.trajectory.size()) throw ContractError("render_scene: pose index out of range");
  spec.intrinsics.validate(spec.height, spec.width);
  const Pose& pose = spec.trajectory[pose_index];
  const Pose cam_to_world = pose.inverse();
  const Vec3 center = cam_to_world.translation;
  const auto& Rt = cam_to_world.rotation;
  const Intrinsics& k = spec.intrinsics;

  std::vector<bool> drawable(spec.objects.size(), true);
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const auto& o = spec.objects[i];
    if (pose.apply({o.center_x, o.center_y, o.distance})[2] <= 0.0) {
      drawable[i] = false;
      ++skipped;
    }
  }
  if (stats) stats->skipped_objects = skipped;

  Frame frame;
  frame.rgb = Image(spec.height, spec.width);
  frame.depth = DepthMap(spec.height, spec.width, 0.0f, false);
  frame.pose = pose;
  frame.intrinsics = k;

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  struct Extent {
    std::size_t x0 = kNone, y0 = kNone, x1 = 0, y1 = 0;
  };
  std::vector<Extent> extents(spec.objects.size());

  for (std::size_t y = 0; y < spec.height; ++y) {
    for (std::size_t x = 0; x < spec.width; ++x) {
      const Vec3 ray{(static_cast<double>(x) - k.cx) / k.fx, (static_cast<double>(y) - k.cy) / k.fy, 1.0};
      const Vec3 dir{Rt[0] * ray[0] + Rt[1] * ray[1] + Rt[2] * ray[2], Rt[3] * ray[0] + Rt[4] * ray[1] + Rt[5] * ray[2],
                     Rt[6] * ray[0] + Rt[7] * ray[1] + Rt[8] * ray[2]};
      if (dir[2] == 0.0) continue;
      // ray(s) = center + s * dir has camera z equal to s because ray.z == 1
      double best = std::numeric_limits<double>::infinity();
      std::size_t hit = kNone;
      double hx = 0.0, hy = 0.0;
      int pattern = 0;
      for (std::size_t i = 0; i < spec.objects.size(); ++i) {
        if (!drawable[i]) continue;
        const auto& o = spec.objects[i];
        const double s = (o.distance - center[2]) / dir[2];
        if (!(s > 0.0) || s >= best) continue;
        const double px = center[0] + s * dir[0], py = center[1] + s * dir[1];
        if (std::abs(px - o.center_x) <= o.half_width && std::abs(py - o.center_y) <= o.half_height) {
          best = s;
          hit = i;
          hx = px;
          hy = py;
          pattern = o.pattern;
        }
      }
      if (hit == kNone) {
        const double s = (spec.background_depth - center[2]) / dir[2];
        if (!(s > 0.0)) continue;
        best = s;
        hx = center[0] + s * dir[0];
        hy = center[1] + s * dir[1];
        pattern = 0;
      } else {
        auto& e = extents[hit];
        e.x0 = std::min(e.x0, x);
        e.y0 = std::min(e.y0, y);
        e.x1 = std::max(e.x1, x + 1);
        e.y1 = std::max(e.y1, y + 1);
      }
      frame.depth.at(y, x) = static_cast<float>(best);
      frame.depth.valid[y * spec.width + x] = 1;
      shade(frame.rgb, y, x, pattern, hx, hy, best);
    }
  }

  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const auto& e = extents[i];
    if (e.x0 == kNone) continue;
    frame.boxes.push_back({pose_index, spec.objects[i].label, e.x0, e.y0, e.x1, e.y1, spec.objects[i].height()});
  }
  return frame;
}

std::vector<Frame> make_sequence(const SceneSpec& spec) {
  if (spec.trajectory.empty()) throw ContractError("make_sequence: empty trajectory");
  std::vector<Frame> frames;
  frames.reserve(spec.trajectory.size());
  for (std::size_t i = 0; i < spec.trajectory.size(); ++i) frames.push_back(render_scene(spec, i));
  return frames;
}

SceneSpec random_scene(const SynthConfig& config, std::size_t scene_index) {
  std::mt19937_64 rng(derive_seed(derive_seed(config.seed, "scene"), scene_index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SceneSpec spec;
  spec.seed = config.seed;
  spec.height = config.height;
  spec.width = config.width;
  const double f = static_cast<double>(config.width);
  spec.intrinsics = {f, f, static_cast<double>(config.width / 2), static_cast<double>(config.height / 2)};
  spec.background_depth = uniform(8.0, 9.5);

  const std::size_t span = config.max_objects - config.min_objects + 1;
  const std::size_t count = config.min_objects + static_cast<std::size_t>(unit(rng) * static_cast<double>(span)) % span;
  for (std::size_t i = 0; i < count; ++i) {
    SceneObject o;
    o.distance = uniform(1.5, 7.0);
    const double view = 0.5 * o.distance * static_cast<double>(config.width) / f;
    o.center_x = uniform(-0.6, 0.6) * view;
    o.center_y = uniform(-0.5, 0.5) * view;
    const int cls = static_cast<int>(unit(rng) * 3.0) % 3;
    o.label = static_cast<ObjectClass>(cls);
    const double scale = o.distance * uniform(0.8, 1.2);
    o.half_width = scale * (cls == 0 ? 0.2 : cls == 1 ? 0.12 : 0.08);
    o.half_height = scale * (cls == 0 ? 0.1 : cls == 1 ? 0.16 : 0.2);
    o.pattern = 1 + static_cast<int>(unit(rng) * (kPaletteCount - 1)) % (kPaletteCount - 1);
    spec.objects.push_back(o);
  }

  spec.trajectory.clear();
  const double phase = uniform(-1.0, 1.0);
  for (std::size_t k = 0; k < config.frames_per_scene; ++k) {
    const double step = static_cast<double>(k);
    const Pose cam_to_world = Pose::from_axis_angle({0, 1, 0}, config.yaw_step * step,
                                                    {config.lateral_step * step * phase, 0.0, config.forward_step * step});
    spec.trajectory.push_back(cam_to_world.inverse());
  }
  return spec;
}

std::vector<Frame> make_dataset(const SynthConfig& config) {
  if (config.scenes == 0 || config.frames_per_scene == 0) throw ConfigError("synth: empty dataset requested");
  if (config.min_objects > config.max_objects) throw ConfigError("synth: min_objects exceeds max_objects");
  std::vector<Frame> frames;
  for (std::size_t s = 0; s < config.scenes; ++s) {
    for (auto& frame : make_sequence(random_scene(config, s))) {
      for (auto& box : frame.boxes) box.frame_id = frames.size();
      frame.scene = s;
      frames.push_back(std::move(frame));
    }
  }
  return frames;
}

}  // namespace md
