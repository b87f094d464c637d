#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "md/loss.hpp"
#include "md/model.hpp"
#include "md/ops.hpp"
#include "md/rng.hpp"
#include "md/synth.hpp"
#include "oracles.hpp"

using namespace md;
using F = Tensor<float>;
using D = Tensor<double>;

namespace {

Frame toy_frame() {
  SynthConfig s;
  s.scenes = 1;
  s.frames_per_scene = 1;
  return make_dataset(s).front();
}

}  // namespace

TEST_CASE("toy shapes") {
  DepthModel<float> model(ModelConfig::toy());
  const Frame f = toy_frame();
  const auto taps = model.image_taps(f.rgb);
  REQUIRE(taps.size() == 2);
  for (const auto& t : taps) CHECK(t.shape() == Shape{64, 32});
  const F cond = model.condition();
  CHECK(cond.shape() == Shape{32});
  const F logits = model.logits(taps, cond);
  CHECK(logits.shape() == Shape{1, 128, 128});
  const DepthMap d = model.infer(f.rgb);
  CHECK(d.height == f.rgb.height);
  CHECK(d.width == f.rgb.width);
  for (float v : d.depth) CHECK(v > 0.0f);
}

TEST_CASE("construction is a pure function of the seed") {
  DepthModel<float> a(ModelConfig::toy()), b(ModelConfig::toy());
  REQUIRE(a.params().all().size() == b.params().all().size());
  for (std::size_t i = 0; i < a.params().all().size(); ++i) {
    const auto& pa = a.params().all()[i];
    const auto& pb = b.params().all()[i];
    CHECK(pa.name == pb.name);
    CHECK(std::equal(pa.tensor.data().begin(), pa.tensor.data().end(), pb.tensor.data().begin()));
  }
  const Frame f = toy_frame();
  CHECK(a.infer(f.rgb) == b.infer(f.rgb));

  ModelConfig other = ModelConfig::toy();
  other.seed = 99;
  DepthModel<float> c(other);
  CHECK_FALSE(a.infer(f.rgb) == c.infer(f.rgb));
}

TEST_CASE("gradients reach the mirror and decoder only") {
  DepthModel<float> model(ModelConfig::toy());
  const Frame f = toy_frame();
  const auto taps = model.image_taps(f.rgb);
  for (const auto& t : taps) CHECK_FALSE(t.requires_grad());
  const F depth = depth_from_logits(model.logits(taps, model.condition()), f.depth.height, f.depth.width);
  silog_loss(depth, f.depth, LossConfig{}).backward();

  double mirror_norm = 0.0;
  for (float g : model.mirror().m.grad()) mirror_norm += double(g) * g;
  CHECK(mirror_norm > 0.0);
  for (const auto& p : model.params().all()) {
    CAPTURE(p.name);
    if (p.frozen) {
      CHECK(p.tensor.grad().empty());
      CHECK_FALSE(p.tensor.requires_grad());
    } else {
      CHECK(p.tensor.grad().size() == p.tensor.size());
    }
  }
}

TEST_CASE("frozen audit") {
  DepthModel<float> model(ModelConfig::toy());
  for (const auto& p : model.params().all()) {
    CAPTURE(p.name);
    const bool learnable = p.name == "mirror" || (p.name.rfind("decoder.", 0) == 0 &&
                                                  p.name.find(".film") == std::string::npos);
    CHECK(p.frozen == !learnable);
  }
}

TEST_CASE("parameter counts") {
  SUBCASE("paper preset") {
    const ModelConfig c = ModelConfig::paper();
    CHECK(oracle::trainable_scalars(c) == 1094113);
    CHECK(decoder_trainable_count(c.decoder, c.vision.tap_layers.size()) + c.mirror_tokens * c.text.width ==
          1094113);
  }
  SUBCASE("toy preset") {
    DepthModel<float> model(ModelConfig::toy());
    CHECK(count_learnable_params(model.params()) == oracle::trainable_scalars(model.config()));
    CHECK(count_learnable_params(model.params()) == 53953);
    model.params().freeze_all();
    CHECK(count_learnable_params(model.params()) == 0);
  }
}

TEST_CASE("FiLM with unit scale and zero shift is the identity") {
  ParamStore<double> store;
  const InitSpec init{1, true, 0.0};
  FiLMParams<double> p{Linear<double>(store, "g", 4, 3, init, 1.0), Linear<double>(store, "b", 4, 3, init, 0.0)};
  for (auto& v : p.gamma_net.weight.mutable_data()) v = 0.0;
  for (auto& v : p.beta_net.weight.mutable_data()) v = 0.0;
  const D a = D::from({5, 3}, normal_draw(15, 1.0, 2));
  const D cond = D::from({4}, normal_draw(4, 1.0, 3));
  const D out = film_modulate(a, cond, p);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(out.data()[i] == a.data()[i]);

  for (auto& v : p.gamma_net.bias.mutable_data()) v = 2.0;
  for (auto& v : p.beta_net.bias.mutable_data()) v = -0.5;
  const D scaled = film_modulate(a, cond, p);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(scaled.data()[i] == doctest::Approx(2.0 * a.data()[i] - 0.5));

  for (auto& v : p.gamma_net.bias.mutable_data()) v = 0.0;
  const D overridden = film_modulate(a, cond, p);
  for (double v : overridden.data()) CHECK(v == -0.5);
}

TEST_CASE("similarity conditioning by hand") {
  ParamStore<double> store;
  const InitSpec init{1, true, 0.0};
  FiLMParams<double> p{Linear<double>(store, "g", 2, 2, init, 1.0), Linear<double>(store, "b", 2, 2, init, 0.0)};
  for (auto& v : p.beta_net.weight.mutable_data()) v = 0.0;
  p.beta_net.bias.mutable_data()[0] = 1.0;
  p.beta_net.bias.mutable_data()[1] = 2.0;  // q = (1, 2)
  const D a = D::from({2, 2}, {1, 0, 3, 4});
  const D out = similarity_modulate(a, D::from({2}, {0.3, -0.7}), p);
  const double r = 1.0 / std::sqrt(2.0);
  const double s0 = 1.0 * r, s1 = 11.0 * r;
  CHECK(out.data()[0] == doctest::Approx(1 + s0));
  CHECK(out.data()[1] == doctest::Approx(0 + 2 * s0));
  CHECK(out.data()[2] == doctest::Approx(3 + s1));
  CHECK(out.data()[3] == doctest::Approx(4 + 2 * s1));
}

TEST_CASE("conditioning changes the prediction") {
  DepthModel<float> model(ModelConfig::toy());
  const Frame f = toy_frame();
  const auto taps = model.image_taps(f.rgb);
  const F c0 = model.condition();
  const F l0 = model.logits(taps, c0);
  randomize_mirror(model.mirror(), 1234);
  const F c1 = model.condition();
  CHECK_FALSE(std::equal(c0.data().begin(), c0.data().end(), c1.data().begin()));
  const F l1 = model.logits(taps, c1);
  double diff = 0.0;
  for (std::size_t i = 0; i < l0.size(); ++i) diff = std::max(diff, double(std::abs(l0.data()[i] - l1.data()[i])));
  CHECK(diff > 0.0);

  ModelConfig sim = ModelConfig::toy();
  sim.decoder.conditioning = Conditioning::similarity;
  DepthModel<float> m2(sim);
  CHECK(m2.logits(m2.image_taps(f.rgb), m2.condition()).shape() == Shape{1, 128, 128});
}

TEST_CASE("zero logits give ln 2") {
  const D depth = depth_from_logits(D::zeros({1, 8, 8}), 20, 12);
  CHECK(depth.shape() == Shape{1, 20, 12});
  for (double v : depth.data()) CHECK(v == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const DepthMap m = predict_depth(F::full({1, 4, 4}, -30.0f), 4, 4);
  for (float v : m.depth) CHECK(v > 0.0f);
}

TEST_CASE("mirror re-randomization keeps the shape") {
  DepthModel<float> model(ModelConfig::toy());
  const Shape before = model.mirror().m.shape();
  randomize_mirror(model.mirror(), 5);
  CHECK(model.mirror().m.shape() == before);
  double ss = 0.0;
  for (float v : model.mirror().m.data()) ss += double(v) * v;
  const double sd = std::sqrt(ss / model.mirror().m.size());
  CHECK(sd == doctest::Approx(kMirrorInitStd).epsilon(0.2));
}

TEST_CASE("invalid configs are rejected") {
  ModelConfig c = ModelConfig::toy();
  c.mirror_tokens = 15;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig::toy();
  c.decoder.cond_dim = 16;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig::toy();
  c.vision.image_size = 60;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
