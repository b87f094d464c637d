#include "md/gradsuite.hpp"

#include <cmath>
#include <map>

#include "md/loss.hpp"
#include "md/ops.hpp"
#include "md/rng.hpp"
#include "md/synth.hpp"

namespace md {

namespace {

using D = Tensor<double>;

class CaseBuilder {
 public:
  explicit CaseBuilder(std::uint64_t seed) : seed_(seed) {}

  D leaf(Shape shape, double stddev = 1.0, double shift = 0.0) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    auto v = normal_draw(n, stddev, derive_seed(seed_, counter_++));
    for (auto& x : v) x += shift;
    return D::from(std::move(shape), std::move(v), true);
  }

  /// Values with |x| >= margin, so kinked functions are probed away from the kink.
  D leaf_away_from_zero(Shape shape, double margin) {
    D t = leaf(std::move(shape));
    for (auto& x : t.mutable_data()) x = x >= 0.0 ? x + margin : x - margin;
    return t;
  }

  /// Scalar sum(out ⊙ R) with a fixed random R.
  D reduce(const D& out) {
    const auto& shape = out.shape();
    auto it = weights_.find(to_string(shape));
    if (it == weights_.end()) {
      std::size_t n = 1;
      for (auto d : shape) n *= d;
      it = weights_.emplace(to_string(shape), D::from(shape, normal_draw(n, 1.0, derive_seed(seed_, "reduce")))).first;
    }
    return sum(mul(out, it->second));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::map<std::string, D> weights_;
};

using Leaves = std::vector<NamedLeaf<double>>;

}  // namespace

GradCheckOptions suite_options() {
  GradCheckOptions o;
  o.step = 3e-5;
  o.tolerance = 1e-3;
  o.abs_floor = 1e-6;
  return o;
}

std::vector<GradCase> primitive_grad_suite(const GradCheckOptions& options) {
  std::vector<GradCase> out;
  CaseBuilder b(2024);
  auto run = [&](const std::string& name, const std::function<D()>& f, Leaves leaves) {
    out.push_back({name, grad_check<double>(f, std::move(leaves), options)});
  };

  {
    D x = b.leaf({3, 4}), y = b.leaf({4, 5});
    run("matmul 3x4 4x5", [&] { return b.reduce(matmul(x, y)); }, {{"a", x}, {"b", y}});
  }
  {
    D x = b.leaf({1, 7}), y = b.leaf({7, 2});
    run("matmul 1x7 7x2", [&] { return b.reduce(matmul(x, y)); }, {{"a", x}, {"b", y}});
  }
  {
    D x = b.leaf({3, 5});
    run("transpose 3x5", [&] { return b.reduce(transpose(x)); }, {{"x", x}});
  }
  {
    D x = b.leaf({4, 3}), y = b.leaf({4, 3});
    run("add 4x3", [&] { return b.reduce(add(x, y)); }, {{"a", x}, {"b", y}});
  }
  {
    D x = b.leaf({2, 6}), y = b.leaf({2, 6});
    run("sub 2x6", [&] { return b.reduce(sub(x, y)); }, {{"a", x}, {"b", y}});
  }
  {
    D x = b.leaf({3, 3}), y = b.leaf({3, 3});
    run("mul 3x3", [&] { return b.reduce(mul(x, y)); }, {{"a", x}, {"b", y}});
  }
  {
    D x = b.leaf({5});
    run("scale 5", [&] { return b.reduce(scale(x, -1.7)); }, {{"x", x}});
  }
  {
    D x = b.leaf({4, 6}), bias = b.leaf({6});
    run("add_bias 4x6", [&] { return b.reduce(add_bias(x, bias)); }, {{"x", x}, {"b", bias}});
  }
  {
    D x = b.leaf({2, 3});
    run("sum 2x3", [&] { return b.reduce(sum(x)); }, {{"x", x}});
  }
  {
    D x = b.leaf({3, 4});
    run("mean 3x4", [&] { return b.reduce(mean(x)); }, {{"x", x}});
  }
  {
    D x = b.leaf({2, 6});
    run("reshape 2x6 to 3x4", [&] { return b.reduce(reshape(x, {3, 4})); }, {{"x", x}});
  }
  {
    D x = b.leaf({5, 3});
    run("slice_rows 5x3", [&] { return b.reduce(slice_rows(x, 1, 3)); }, {{"x", x}});
  }
  {
    D x = b.leaf({4, 6});
    run("slice_cols 4x6", [&] { return b.reduce(slice_cols(x, 2, 3)); }, {{"x", x}});
  }
  {
    D x = b.leaf({2, 4}), y = b.leaf({3, 4});
    run("concat_rows", [&] { return b.reduce(concat_rows<double>({x, y})); }, {{"a", x}, {"b", y}});
  }
  {
    D x = b.leaf({3, 2}), y = b.leaf({3, 5});
    run("concat_cols", [&] { return b.reduce(concat_cols<double>({x, y})); }, {{"a", x}, {"b", y}});
  }
  {
    D x = b.leaf({3, 8}), g = b.leaf({8}, 0.3, 1.0), beta = b.leaf({8});
    run("layer_norm 3x8", [&] { return b.reduce(layer_norm(x, g, beta, 1e-5)); },
        {{"x", x}, {"gamma", g}, {"beta", beta}});
  }
  {
    D x = b.leaf({4, 5}, 2.0);
    run("softmax 4x5", [&] { return b.reduce(softmax(x)); }, {{"x", x}});
  }
  {
    D x = b.leaf({5, 5}, 2.0);
    run("causal_softmax 5x5", [&] { return b.reduce(causal_softmax(x)); }, {{"x", x}});
  }
  {
    D x = b.leaf({3, 7}, 2.0);
    run("gelu 3x7", [&] { return b.reduce(gelu(x)); }, {{"x", x}});
  }
  {
    D x = b.leaf_away_from_zero({3, 7}, 0.05);
    run("relu 3x7", [&] { return b.reduce(relu(x)); }, {{"x", x}});
  }
  {
    D x = b.leaf({3, 7}, 8.0);
    run("softplus 3x7", [&] { return b.reduce(softplus(x)); }, {{"x", x}});
  }
  {
    D x = b.leaf({4, 6}), g = b.leaf({6}), beta = b.leaf({6});
    run("film 4x6", [&] { return b.reduce(film(x, g, beta)); }, {{"x", x}, {"gamma", g}, {"beta", beta}});
  }
  {
    D x = b.leaf({2, 7, 7}), w = b.leaf({3, 2, 3, 3}), bias = b.leaf({3});
    run("conv2d k3 s1 p1", [&] { return b.reduce(conv2d(x, w, bias, 1, 1)); }, {{"x", x}, {"w", w}, {"b", bias}});
  }
  {
    D x = b.leaf({3, 9, 8}), w = b.leaf({2, 3, 2, 2}), bias = b.leaf({2});
    run("conv2d k2 s2 p0", [&] { return b.reduce(conv2d(x, w, bias, 2, 0)); }, {{"x", x}, {"w", w}, {"b", bias}});
  }
  {
    D x = b.leaf({3, 8, 8}), w = b.leaf({4, 3, 4, 4});
    run("conv2d patch k4 s4", [&] { return b.reduce(conv2d(x, w, D(), 4, 0)); }, {{"x", x}, {"w", w}});
  }
  {
    D x = b.leaf({3, 3, 3}), w = b.leaf({3, 2, 4, 4}), bias = b.leaf({2});
    run("conv_transpose2d k4 s4", [&] { return b.reduce(conv_transpose2d(x, w, bias, 4, 0)); },
        {{"x", x}, {"w", w}, {"b", bias}});
  }
  {
    D x = b.leaf({2, 4, 5}), w = b.leaf({2, 3, 3, 3}), bias = b.leaf({3});
    run("conv_transpose2d k3 s2 p1", [&] { return b.reduce(conv_transpose2d(x, w, bias, 2, 1)); },
        {{"x", x}, {"w", w}, {"b", bias}});
  }
  {
    D x = b.leaf({2, 5, 5});
    run("bilinear_resize up 5x5 to 9x11", [&] { return b.reduce(bilinear_resize(x, 9, 11)); }, {{"x", x}});
  }
  {
    D x = b.leaf({1, 8, 8});
    run("bilinear_resize down 8x8 to 3x5", [&] { return b.reduce(bilinear_resize(x, 3, 5)); }, {{"x", x}});
  }
  {
    DepthMap gt(6, 6);
    const auto gv = normal_draw(36, 0.5, 99);
    for (std::size_t i = 0; i < 36; ++i) gt.depth[i] = static_cast<float>(3.0 * std::exp(gv[i]));
    gt.valid[7] = 0;
    D pred = b.leaf({1, 6, 6}, 0.3, 2.5);
    run("silog_loss 6x6", [&] { return silog_loss(pred, gt, LossConfig{}); }, {{"pred", pred}});
  }
  return out;
}

GradCase model_grad_check(const ModelConfig& config, std::size_t entries_per_leaf, double probe_std,
                          const GradCheckOptions& options) {
  DepthModel<double> model(config);
  SynthConfig sc;
  sc.scenes = 1;
  sc.frames_per_scene = 1;
  sc.height = sc.width = config.vision.image_size;
  const Frame frame = make_dataset(sc).front();
  const auto taps = model.image_taps(frame.rgb);

  Leaves leaves;
  for (auto& p : model.params().all()) {
    if (p.frozen) continue;
    if (probe_std > 0.0) {
      auto data = p.tensor.mutable_data();
      const auto noise = normal_draw(data.size(), probe_std, derive_seed(derive_seed(config.seed, "probe"), p.name));
      for (std::size_t i = 0; i < data.size(); ++i) data[i] += noise[i];
    }
    leaves.push_back({p.name, p.tensor});
  }
  auto f = [&] {
    const D depth = depth_from_logits(model.logits(taps, model.condition()), frame.depth.height, frame.depth.width);
    return silog_loss(depth, frame.depth, LossConfig{});
  };
  GradCheckOptions o = options;
  o.max_entries_per_leaf = entries_per_leaf;
  return {"model loss", grad_check<double>(f, std::move(leaves), o)};
}

}  // namespace md
