#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "md/consistency.hpp"
#include "md/rng.hpp"
#include "md/synth.hpp"
#include "oracles.hpp"

using namespace md;

namespace {

const Intrinsics kK{64.0, 64.0, 32.0, 32.0};

DepthMap noisy_map(std::uint64_t seed) {
  DepthMap m(64, 64);
  const auto g = normal_draw(m.size(), 0.3, seed);
  for (std::size_t i = 0; i < m.size(); ++i) m.depth[i] = static_cast<float>(5.0 * std::exp(g[i]));
  m.valid[17] = 0;
  return m;
}

double mean_gt_self_inconsistency(const std::vector<Frame>& frames) {
  std::vector<DepthMap> gt;
  for (const auto& f : frames) gt.push_back(f.depth);
  const auto rows = sequence_consistency(frames, gt, gt, 1);
  REQUIRE_FALSE(rows.empty());
  double s = 0.0;
  for (const auto& r : rows) s += r.incons_model;
  return s / static_cast<double>(rows.size());
}

}  // namespace

TEST_CASE("identity pose is exact") {
  const DepthMap d = noisy_map(1);
  const DepthMap r = reproject_depth(d, Pose::identity(), kK, ReprojectOptions{0.0});
  CHECK(r.valid == d.valid);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.valid[i]) CHECK(r.depth[i] == d.depth[i]);
  }
}

TEST_CASE("plane at 10 m after a 1 m forward step") {
  const DepthMap plane(64, 64, 10.0f);
  Pose forward;
  forward.translation = {0.0, 0.0, 1.0};
  const DepthMap r = reproject_depth(plane, forward, kK);
  REQUIRE(r.is_valid(32, 32));
  CHECK(std::abs(r.at(32, 32) - 9.0) <= 1e-4);
  std::size_t valid = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!r.valid[i]) continue;
    ++valid;
    CHECK(std::abs(r.depth[i] - 9.0) <= 1e-4);
  }
  CHECK(valid > 0);
}

TEST_CASE("pure rotation matches the homography oracle") {
  const DepthMap plane(64, 64, 10.0f);
  for (auto [axis, angle] : {std::pair<Vec3, double>{{0, 1, 0}, 0.05}, {{1, 0, 0}, -0.03}, {{0.3, 0.4, 0.5}, 0.08}}) {
    const Pose rot = Pose::from_axis_angle(axis, angle, {0, 0, 0});
    const DepthMap r = reproject_depth(plane, rot, kK);
    const DepthMap o = oracle::rotation_reprojection(plane, oracle::rodrigues(axis, angle), kK);
    CHECK(r.valid == o.valid);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r.valid[i] && o.valid[i]) worst = std::max(worst, double(std::abs(r.depth[i] - o.depth[i])));
    }
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("reprojection round trip") {
  const DepthMap plane(64, 64, 8.0f);
  const Pose p = Pose::from_axis_angle({0, 1, 0}, 0.04, {0.1, 0.0, 0.2});
  const DepthMap there = reproject_depth(plane, p, kK);
  const DepthMap back = reproject_depth(there, p.inverse(), kK);
  double splat = 0.0;  // largest neighbour step of the intermediate map
  for (std::size_t y = 0; y < 64; ++y) {
    for (std::size_t x = 0; x + 1 < 64; ++x) {
      if (there.is_valid(y, x) && there.is_valid(y, x + 1)) {
        splat = std::max(splat, double(std::abs(there.at(y, x) - there.at(y, x + 1))));
      }
    }
  }
  std::size_t covisible = 0;
  for (std::size_t i = 0; i < back.size(); ++i) {
    if (!back.valid[i]) continue;
    ++covisible;
    CHECK(std::abs(back.depth[i] - plane.depth[i]) <= 2.0 * splat + 1e-5);
  }
  CHECK(covisible > 1000);
}

TEST_CASE("inconsistency formula") {
  const DepthMap d = noisy_map(2);
  const auto same = temporal_inconsistency(d, d);
  CHECK(same.mean == 0.0);
  CHECK(same.count == d.size() - 1);

  const auto r = temporal_inconsistency(DepthMap(1, 1, 3.0f), DepthMap(1, 1, 1.0f));
  CHECK(r.mean == 0.5);

  const DepthMap e = noisy_map(3);
  const auto ab = temporal_inconsistency(d, e);
  const auto ba = temporal_inconsistency(e, d);
  CHECK(ab.mean == doctest::Approx(ba.mean).epsilon(1e-15));
  for (std::size_t i = 0; i < ab.map.size(); ++i) {
    if (!ab.map.valid[i]) continue;
    CHECK(ab.map.depth[i] >= 0.0f);
    CHECK(ab.map.depth[i] < 1.0f);
  }

  CHECK_THROWS_AS(temporal_inconsistency(DepthMap(2, 2, 1.0f, false), DepthMap(2, 2, 1.0f)), EmptyMaskError);
}

TEST_CASE("ground truth is self-consistent along synthetic trajectories") {
  SynthConfig s;
  s.scenes = 4;
  s.frames_per_scene = 5;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    CAPTURE(seed);
    s.seed = seed;
    CHECK(mean_gt_self_inconsistency(make_dataset(s)) <= 1e-3);
  }
}

TEST_CASE("window") {
  SynthConfig s;
  s.scenes = 2;
  s.frames_per_scene = 3;
  const auto frames = make_dataset(s);
  std::vector<DepthMap> gt;
  for (const auto& f : frames) gt.push_back(f.depth);
  CHECK(sequence_consistency(frames, gt, gt, 0).empty());

  const auto rows = sequence_consistency(frames, gt, gt, 2);
  for (const auto& r : rows) {
    CHECK(frames[r.frame].scene == frames[r.neighbor].scene);
    const std::size_t gap = r.frame > r.neighbor ? r.frame - r.neighbor : r.neighbor - r.frame;
    CHECK(gap >= 1);
    CHECK(gap <= 2);
  }
  CHECK(rows.size() == 2 * (2 * 2 + 2 * 1));
}

TEST_CASE("medians and continuity pairs") {
  CHECK(lower_median({3.0f, 1.0f, 2.0f}) == 2.0f);
  CHECK(lower_median({4.0f, 1.0f, 3.0f, 2.0f}) == 2.0f);
  CHECK_THROWS_AS(lower_median({}), EmptyMaskError);

  const std::vector<DepthMap> constant(2, DepthMap(16, 16, 4.5f));
  std::vector<BBox> boxes{{0, ObjectClass::car, 1, 1, 5, 6, 1.5},
                          {1, ObjectClass::pedestrian, 2, 3, 9, 12, 1.7},
                          {1, ObjectClass::car, 4, 4, 4, 8, 1.4}};
  const auto r = continuity_pairs(constant, boxes);
  CHECK(r.skipped == 1);
  REQUIRE(r.pairs.size() == 2);
  for (const auto& p : r.pairs) CHECK(p.median_depth == 4.5);

  std::reverse(boxes.begin(), boxes.end());
  const auto again = continuity_pairs(constant, boxes);
  REQUIRE(again.pairs.size() == r.pairs.size());
  for (std::size_t i = 0; i < r.pairs.size(); ++i) {
    CHECK(again.pairs[i].label == r.pairs[i].label);
    CHECK(again.pairs[i].frame_id == r.pairs[i].frame_id);
    CHECK(again.pairs[i].median_depth == r.pairs[i].median_depth);
  }
}

TEST_CASE("synthetic boxes recover object distances") {
  SynthConfig s;
  s.scenes = 2;
  s.frames_per_scene = 2;
  const auto frames = make_dataset(s);
  std::vector<DepthMap> gt;
  std::vector<BBox> boxes;
  for (const auto& f : frames) {
    gt.push_back(f.depth);
    boxes.insert(boxes.end(), f.boxes.begin(), f.boxes.end());
  }
  const auto r = continuity_pairs(gt, boxes);
  CHECK(r.pairs.size() + r.skipped == boxes.size());
  CHECK_FALSE(r.pairs.empty());
  for (const auto& p : r.pairs) {
    CHECK(p.median_depth >= 1.5 - 1e-3);
    CHECK(p.median_depth <= 7.0 + 1e-3);
  }
}
