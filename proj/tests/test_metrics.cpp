#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "md/metrics.hpp"
#include "md/rng.hpp"
#include "md/train.hpp"
#include "oracles.hpp"

using namespace md;

namespace {

DepthMap map_from(std::size_t h, std::size_t w, std::vector<float> values) {
  DepthMap m(h, w);
  m.depth = std::move(values);
  return m;
}

DepthMap random_map(std::size_t h, std::size_t w, std::uint64_t seed, double scale = 4.0) {
  DepthMap m(h, w);
  const auto g = normal_draw(h * w, 0.5, seed);
  for (std::size_t i = 0; i < m.size(); ++i) m.depth[i] = static_cast<float>(scale * std::exp(g[i]));
  return m;
}

void check_close(const MetricsRecord& a, const MetricsRecord& b, double tol) {
  CHECK(std::abs(a.abs_rel - b.abs_rel) <= tol);
  CHECK(std::abs(a.sq_rel - b.sq_rel) <= tol);
  CHECK(std::abs(a.rmse - b.rmse) <= tol);
  CHECK(std::abs(a.log10 - b.log10) <= tol);
  CHECK(std::abs(a.delta1 - b.delta1) <= tol);
  CHECK(std::abs(a.delta2 - b.delta2) <= tol);
  CHECK(std::abs(a.delta3 - b.delta3) <= tol);
  CHECK(a.t == b.t);
}

}  // namespace

TEST_CASE("perfect prediction") {
  const DepthMap gt = random_map(9, 11, 1);
  const auto r = compute_metrics(gt, gt, CropSpec::none(), 1e-3, 80.0);
  CHECK(r.abs_rel == 0.0);
  CHECK(r.sq_rel == 0.0);
  CHECK(r.rmse == 0.0);
  CHECK(r.log10 == 0.0);
  CHECK(r.delta1 == 1.0);
  CHECK(r.delta2 == 1.0);
  CHECK(r.delta3 == 1.0);
  CHECK(r.t == 99);
}

TEST_CASE("single pixel, prediction twice the truth") {
  const auto r = compute_metrics(map_from(1, 1, {2.0f}), map_from(1, 1, {1.0f}), CropSpec::none(), 1e-3, 80.0);
  CHECK(r.abs_rel == 1.0);
  CHECK(r.sq_rel == 1.0);
  CHECK(r.rmse == 1.0);
  CHECK(r.log10 == doctest::Approx(0.30103).epsilon(1e-5));
  CHECK(r.delta1 == 0.0);
  CHECK(r.delta2 == 0.0);
  CHECK(r.delta3 == 0.0);  // 2 > 1.25³ = 1.953125
}

TEST_CASE("two pixels against the brute-force oracle") {
  const DepthMap pred = map_from(1, 2, {1.0f, 3.0f});
  const DepthMap gt = map_from(1, 2, {2.0f, 2.0f});
  const auto r = compute_metrics(pred, gt, CropSpec::none(), 1e-3, 80.0);
  check_close(r, oracle::metrics(pred, gt, 1e-3, 80.0), 1e-12);
  CHECK(r.abs_rel == 0.5);
  CHECK(r.rmse == 1.0);
  CHECK(r.delta1 == 0.0);  // ratios 2 and 1.5
  CHECK(r.delta2 == 0.5);
  CHECK(r.delta3 == 0.5);
}

TEST_CASE("random maps match the oracle") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    DepthMap gt = random_map(13, 17, 1000 + seed);
    const DepthMap pred = random_map(13, 17, 2000 + seed);
    gt.valid[seed % gt.size()] = 0;
    const auto r = compute_metrics(pred, gt, CropSpec::none(), 1e-3, 10.0);
    check_close(r, oracle::metrics(pred, gt, 1e-3, 10.0), 1e-6);
    CHECK(r.delta1 <= r.delta2);
    CHECK(r.delta2 <= r.delta3);
  }
}

TEST_CASE("masked values and pixel order do not matter") {
  DepthMap gt = random_map(8, 8, 3);
  DepthMap pred = random_map(8, 8, 4);
  gt.valid[5] = 0;
  gt.depth[9] = 50.0f;  // beyond a 10 m cap
  const auto base = compute_metrics(pred, gt, CropSpec::none(), 1e-3, 10.0);
  pred.depth[5] = 1e6f;
  pred.depth[9] = 1e-6f;
  check_close(compute_metrics(pred, gt, CropSpec::none(), 1e-3, 10.0), base, 0.0);
  std::reverse(pred.depth.begin(), pred.depth.end());
  std::reverse(gt.depth.begin(), gt.depth.end());
  std::reverse(gt.valid.begin(), gt.valid.end());
  check_close(compute_metrics(pred, gt, CropSpec::none(), 1e-3, 10.0), base, 1e-12);
}

TEST_CASE("abs rel of a scaled truth") {
  const DepthMap gt = random_map(6, 6, 5);
  for (float c : {0.5f, 2.0f, 4.0f}) {
    DepthMap pred = gt;
    for (auto& v : pred.depth) v *= c;
    CHECK(compute_metrics(pred, gt, CropSpec::none(), 1e-3, 80.0).abs_rel == std::abs(double(c) - 1.0));
  }
  DepthMap pred = gt;
  for (auto& v : pred.depth) v *= 1.3f;
  CHECK(compute_metrics(pred, gt, CropSpec::none(), 1e-3, 80.0).abs_rel == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("empty mask") {
  const DepthMap gt(3, 3, 1.0f, false);
  CHECK_THROWS_AS(compute_metrics(gt, gt, CropSpec::none(), 1e-3, 80.0), EmptyMaskError);
  CHECK_THROWS_AS(compute_metrics(DepthMap(2, 2), gt, CropSpec::none(), 1e-3, 80.0), DimensionError);
}

TEST_CASE("crops") {
  const DepthMap m = random_map(352, 352, 6);
  CHECK(apply_crop(m, CropSpec::none()) == m);

  const PixelRect g = crop_rect(CropSpec::garg(), 352, 352);
  CHECK(g.y0 == 143);
  CHECK(g.y1 == 350);
  CHECK(g.x0 == 12);
  CHECK(g.x1 == 340);
  const DepthMap c = apply_crop(m, CropSpec::garg());
  CHECK(c.height == 207);
  CHECK(c.width == 328);
  CHECK(c.at(0, 0) == m.at(143, 12));

  const PixelRect e = crop_rect(CropSpec::eigen(), 352, 352);
  CHECK(e.y0 > 0);
  CHECK(e.x0 > 0);
  CHECK(e.y1 < 352);
  CHECK(e.x1 < 352);
  CHECK(e.y1 > e.y0);
  CHECK(e.x1 > e.x0);
  const PixelRect native = crop_rect(CropSpec::eigen(), 480, 640);
  CHECK(native.y0 == 45);
  CHECK(native.y1 == 471);
  CHECK(native.x0 == 41);
  CHECK(native.x1 == 601);

  CropSpec bad;
  bad.top = 0.6;
  bad.bottom = 0.5;
  CHECK_THROWS_AS(crop_rect(bad, 10, 10), ContractError);
  CHECK_THROWS_AS(CropSpec::parse("kitti"), ConfigError);
}

TEST_CASE("aggregate is the per-frame mean") {
  MetricsRecord a, b;
  a.abs_rel = 0.1;
  a.delta1 = 1.0;
  a.t = 10;
  b.abs_rel = 0.3;
  b.delta1 = 0.5;
  b.t = 30;
  const auto m = aggregate_metrics({a, b});
  CHECK(m.abs_rel == doctest::Approx(0.2));
  CHECK(m.delta1 == doctest::Approx(0.75));
  CHECK(m.t == 40);
  CHECK(metrics_csv_header() == "frame_id,abs_rel,sq_rel,rmse,log10,d1,d2,d3,t");
}

TEST_CASE("evaluation resolution") {
  Frame f;
  f.depth = random_map(64, 64, 7);
  const DepthMap pred = random_map(64, 64, 8);
  EvalConfig cfg;
  cfg.max_depth = 80.0;
  const auto native = evaluate({pred}, {f}, cfg, 32);
  CHECK(native.front().t == 64 * 64);
  check_close(native.front(), oracle::metrics(pred, f.depth, cfg.min_depth, cfg.max_depth), 1e-6);
  cfg.resolution = EvalResolution::model;
  const auto model = evaluate({pred}, {f}, cfg, 32);
  CHECK(model.front().t == 32 * 32);
  CHECK(parse_eval_resolution("model") == EvalResolution::model);
}
