#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "md/gradsuite.hpp"
#include "md/loss.hpp"
#include "md/ops.hpp"
#include "md/rng.hpp"

using namespace md;
using D = Tensor<double>;

namespace {

/// x ⊙ x with a backward that returns x instead of 2x.
D wrong_square(const D& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x.data()[i] * x.data()[i];
  auto parent = x.node();
  return detail::make_op<double>(x.shape(), std::move(out), {&x}, [parent](Node<double>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) parent->grad[i] += self.grad[i] * parent->data[i];
  });
}

}  // namespace

TEST_CASE("every primitive passes") {
  const auto cases = primitive_grad_suite();
  CHECK(cases.size() >= 20);
  for (const auto& c : cases) {
    CAPTURE(c.name);
    CAPTURE(format_report(c.report));
    CHECK(c.report.passed);
    CHECK(c.report.max_rel_error < 1e-3);
  }
}

TEST_CASE("sum of matmul at 1e-4") {
  D a = D::from({3, 4}, normal_draw(12, 1.0, 1), true);
  D b = D::from({4, 2}, normal_draw(8, 1.0, 2), true);
  GradCheckOptions o = suite_options();
  o.tolerance = 1e-4;
  const auto r = grad_check<double>([&] { return sum(matmul(a, b)); }, {{"a", a}, {"b", b}}, o);
  CHECK(r.passed);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("silog loss on a small map") {
  DepthMap gt(4, 5);
  const auto g = normal_draw(20, 0.3, 3);
  for (std::size_t i = 0; i < 20; ++i) gt.depth[i] = static_cast<float>(2.0 * std::exp(g[i]));
  gt.valid[7] = 0;
  auto init = normal_draw(20, 0.2, 4);
  for (auto& v : init) v = 2.0 * std::exp(v);
  D pred = D::from({4, 5}, init, true);
  const auto r = grad_check<double>([&] { return silog_loss(pred, gt, LossConfig{}); }, {{"pred", pred}},
                                    suite_options());
  CHECK(r.passed);
}

TEST_CASE("a wrong backward rule is caught") {
  D x = D::from({6}, normal_draw(6, 1.0, 5), true);
  for (auto& v : x.mutable_data()) v += v >= 0 ? 0.5 : -0.5;
  const auto r = grad_check<double>([&] { return sum(wrong_square(x)); }, {{"x", x}}, suite_options());
  CHECK_FALSE(r.passed);
  CHECK(r.max_rel_error > 0.3);
}

TEST_CASE("full toy model") {
  const auto r = model_grad_check(ModelConfig::toy(), 3);
  CAPTURE(format_report(r.report));
  CHECK(r.report.passed);
  CHECK(r.report.leaves.size() > 10);
}
