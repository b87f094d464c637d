#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "md/loss.hpp"
#include "md/ops.hpp"
#include "md/optim.hpp"
#include "md/rng.hpp"

using namespace md;
using D = Tensor<double>;

namespace {

DepthMap random_depth(std::size_t h, std::size_t w, std::uint64_t seed) {
  DepthMap m(h, w);
  const auto g = normal_draw(h * w, 0.4, seed);
  for (std::size_t i = 0; i < m.size(); ++i) m.depth[i] = static_cast<float>(3.0 * std::exp(g[i]));
  return m;
}

D as_tensor(const DepthMap& m, double factor = 1.0) {
  std::vector<double> v(m.depth.begin(), m.depth.end());
  for (auto& x : v) x *= factor;
  return D::from({m.height, m.width}, v);
}

}  // namespace

TEST_CASE("silog examples") {
  const DepthMap gt = random_depth(6, 7, 1);
  CHECK(silog_loss(as_tensor(gt), gt, LossConfig{}).item() == 0.0);
  CHECK(silog_loss(gt, gt, LossConfig{}) == 0.0);

  const double e = silog_loss(as_tensor(gt, std::numbers::e), gt, LossConfig{}).item();
  CHECK(e == doctest::Approx(10.0 * std::sqrt(0.15)).epsilon(1e-6));
  CHECK(e == doctest::Approx(3.87298).epsilon(1e-5));
}

TEST_CASE("silog ignores masked pixels and pixel order") {
  DepthMap gt = random_depth(5, 5, 2);
  const DepthMap pred = random_depth(5, 5, 3);
  gt.valid[3] = 0;
  gt.depth[8] = 200.0f;  // above max_depth
  const LossConfig cfg;
  const double base = silog_loss(pred, gt, cfg);

  DepthMap pred2 = pred;
  pred2.depth[3] = 1000.0f;
  pred2.depth[8] = 0.01f;
  CHECK(silog_loss(pred2, gt, cfg) == doctest::Approx(base).epsilon(1e-12));

  DepthMap gp = gt, pp = pred;
  std::reverse(gp.depth.begin(), gp.depth.end());
  std::reverse(gp.valid.begin(), gp.valid.end());
  std::reverse(pp.depth.begin(), pp.depth.end());
  CHECK(silog_loss(pp, gp, cfg) == doctest::Approx(base).epsilon(1e-12));

  const auto mask = loss_mask(gt, cfg.min_depth, cfg.max_depth);
  CHECK(std::count(mask.begin(), mask.end(), 1) == 23);
}

TEST_CASE("lambda one makes silog scale invariant") {
  const DepthMap gt = random_depth(8, 8, 4);
  const DepthMap pred = random_depth(8, 8, 5);
  LossConfig cfg;
  cfg.lambda = 1.0;
  const double base = silog_loss(as_tensor(pred), gt, cfg).item();
  for (double c : {0.1, 0.5, 3.0, 40.0}) {
    CHECK(silog_loss(as_tensor(pred, c), gt, cfg).item() == doctest::Approx(base).epsilon(1e-5));
  }
}

TEST_CASE("silog errors") {
  DepthMap gt(2, 2, 1.0f, false);
  CHECK_THROWS_AS(silog_loss(gt, gt, LossConfig{}), EmptyMaskError);
  const DepthMap ok(2, 2, 1.0f);
  CHECK_THROWS(silog_loss(D::from({2, 2}, {1, -1, 1, 1}), ok, LossConfig{}));
  CHECK_THROWS_AS(silog_loss(D::zeros({3}), ok, LossConfig{}), DimensionError);
}

TEST_CASE("cosine schedule") {
  CHECK(cosine_lr(0, 100, 0.003, 0.0) == 0.003);
  CHECK(cosine_lr(100, 100, 0.003, 0.0) == doctest::Approx(0.0));
  CHECK(cosine_lr(50, 100, 0.003, 0.0) == doctest::Approx(0.0015).epsilon(1e-12));
  CHECK(cosine_lr(50, 100, 0.003, 0.001) == doctest::Approx(0.002).epsilon(1e-12));
  CHECK(cosine_lr(25, 100, 0.003, 0.0) > cosine_lr(75, 100, 0.003, 0.0));
  CHECK_THROWS_AS(cosine_lr(101, 100, 0.003, 0.0), ContractError);
}

TEST_CASE("zero gradients without decay leave parameters unchanged") {
  ParamStore<float> store;
  auto p = store.add("w", {4}, {0.5, -1.0, 2.0, 0.0}, false);
  OptimConfig cfg;
  cfg.weight_decay = 0.0;
  AdamW opt(cfg);
  const std::vector<float> before(p.data().begin(), p.data().end());
  for (int i = 0; i < 3; ++i) opt.step(store, 0.1);
  CHECK(std::equal(before.begin(), before.end(), p.data().begin()));
}

TEST_CASE("single scalar update by hand") {
  ParamStore<float> store;
  auto p = store.add("w", {1}, {1.0}, false);
  OptimConfig cfg;
  cfg.weight_decay = 0.01;
  AdamW opt(cfg);
  const double lr = 0.1;

  p.mutable_grad()[0] = 0.5f;
  opt.step(store, lr);
  // m = 0.05, v = 0.00025, m̂ = 0.5, v̂ = 0.25
  double expect = 1.0 * (1.0 - lr * 0.01) - lr * 0.5 / (0.5 + 1e-8);
  CHECK(std::abs(p.data()[0] - expect) < 1e-7);

  p.mutable_grad()[0] = -0.2f;
  opt.step(store, lr);
  const double m = 0.9 * 0.05 + 0.1 * -0.2;
  const double v = 0.999 * 0.00025 + 0.001 * 0.04;
  const double m_hat = m / (1 - 0.81), v_hat = v / (1 - 0.999 * 0.999);
  expect = double(float(expect)) * (1.0 - lr * 0.01) - lr * m_hat / (std::sqrt(v_hat) + 1e-8);
  CHECK(std::abs(p.data()[0] - expect) < 1e-7);
  CHECK(opt.steps_taken() == 2);
}

TEST_CASE("frozen and skipped parameters are untouched") {
  ParamStore<float> store;
  auto w = store.add("w", {3}, {1.0, 2.0, 3.0}, false);
  auto f = store.add("film", {3}, {1.0, 2.0, 3.0}, true);
  auto s = store.add("skip", {3}, {1.0, 2.0, 3.0}, false);
  AdamW opt;
  for (int i = 0; i < 100; ++i) {
    for (auto& g : w.mutable_grad()) g = 0.3f;
    for (auto& g : s.mutable_grad()) g = 0.3f;
    opt.step(store, 0.01, {"skip"});
  }
  CHECK(f.grad().empty());
  CHECK(f.data()[0] == 1.0f);
  CHECK(f.data()[2] == 3.0f);
  CHECK(s.data()[1] == 2.0f);
  CHECK(w.data()[1] < 2.0f);
  CHECK(opt.moments().count("film") == 0);
  CHECK(opt.moments().count("skip") == 0);
}

TEST_CASE("non-finite gradients abort the step") {
  ParamStore<float> store;
  auto w = store.add("decoder.conv.bias", {2}, {1.0, 1.0}, false);
  w.mutable_grad()[1] = std::numeric_limits<float>::quiet_NaN();
  AdamW opt;
  try {
    opt.step(store, 0.01);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("decoder.conv.bias") != std::string::npos);
  }
  CHECK(w.data()[0] == 1.0f);
  CHECK(opt.steps_taken() == 0);
}
