#include "md/loss.hpp"

#include <cmath>

namespace md {

void LossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("loss.lambda must lie in [0, 1]");
  if (!(alpha > 0.0)) throw ConfigError("loss.alpha must be positive");
  if (!(min_depth > 0.0 && min_depth < max_depth)) throw ConfigError("loss depth bounds must satisfy 0 < min < max");
}

std::vector<std::uint8_t> loss_mask(const DepthMap& gt, double min_depth, double max_depth) {
  std::vector<std::uint8_t> mask(gt.size(), 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double d = gt.depth[i];
    mask[i] = gt.valid[i] != 0 && d > 0.0 && d >= min_depth && d <= max_depth;
  }
  return mask;
}

namespace {

struct SilogForward {
  std::vector<double> g;  // 0 outside the mask
  std::vector<std::uint8_t> mask;
  double n = 0.0;
  double mean_g = 0.0;
  double variance = 0.0;
  double value = 0.0;
};

template <typename T>
SilogForward silog_forward(std::span<const T> pred, const DepthMap& gt, const std::vector<std::uint8_t>& mask,
                           const LossConfig& cfg) {
  SilogForward f;
  f.mask = mask;
  f.g.assign(pred.size(), 0.0);
  double sum = 0.0, sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    if (!(pred[i] > T(0))) {
      throw ContractError("silog_loss: prediction at pixel " + std::to_string(i) + " is not strictly positive");
    }
    const double gi = std::log(static_cast<double>(pred[i])) - std::log(static_cast<double>(gt.depth[i]));
    f.g[i] = gi;
    sum += gi;
    sum_sq += gi * gi;
    ++count;
  }
  if (count == 0) throw EmptyMaskError("silog_loss: no valid ground-truth pixel");
  f.n = static_cast<double>(count);
  f.mean_g = sum / f.n;
  f.variance = sum_sq / f.n - cfg.lambda * f.mean_g * f.mean_g;
  f.value = f.variance > 0.0 ? cfg.alpha * std::sqrt(f.variance) : 0.0;
  return f;
}

}  // namespace

template <typename T>
Tensor<T> silog_loss(const Tensor<T>& pred, const DepthMap& gt, const LossConfig& cfg) {
  if (pred.size() != gt.size()) {
    throw DimensionError("silog_loss: prediction has " + std::to_string(pred.size()) + " values, gt has " +
                         std::to_string(gt.size()));
  }
  auto mask = loss_mask(gt, cfg.min_depth, cfg.max_depth);
  auto f = silog_forward(pred.data(), gt, mask, cfg);
  const double value = f.value;
  Node<T>* pred_node = pred.node().get();
  return detail::make_op<T>({1}, {static_cast<T>(value)}, {&pred},
                            [pred_node, f = std::move(f), alpha = cfg.alpha, lambda = cfg.lambda](Node<T>& self) {
                              if (!pred_node->requires_grad || !(f.variance > 0.0)) return;
                              const double upstream = static_cast<double>(self.grad[0]);
                              const double coeff = upstream * alpha / (f.n * std::sqrt(f.variance));
                              const double shift = lambda * f.mean_g;
                              for (std::size_t i = 0; i < f.g.size(); ++i) {
                                if (!f.mask[i]) continue;
                                const double p = static_cast<double>(pred_node->data[i]);
                                pred_node->grad[i] += static_cast<T>(coeff * (f.g[i] - shift) / p);
                              }
                            });
}

double silog_loss(const DepthMap& pred, const DepthMap& gt, const LossConfig& cfg) {
  if (pred.size() != gt.size()) throw DimensionError("silog_loss: prediction and gt sizes differ");
  const auto mask = loss_mask(gt, cfg.min_depth, cfg.max_depth);
  return silog_forward(std::span<const float>(pred.depth), gt, mask, cfg).value;
}

template Tensor<float> silog_loss(const Tensor<float>&, const DepthMap&, const LossConfig&);
template Tensor<double> silog_loss(const Tensor<double>&, const DepthMap&, const LossConfig&);

}  // namespace md
