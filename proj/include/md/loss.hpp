#pragma once

#include "md/image.hpp"
#include "md/tensor.hpp"

namespace md {

struct LossConfig {
  double lambda = 0.85;
  double alpha = 10.0;
  double min_depth = 1e-3;
  double max_depth = 80.0;

  void validate() const;
};

/// Pixels that count: flagged valid, gt > 0, and gt within [min_depth, max_depth].
std::vector<std::uint8_t> loss_mask(const DepthMap& gt, double min_depth, double max_depth);

/// alpha * sqrt(mean(g^2) - lambda * mean(g)^2), g = ln pred - ln gt over masked pixels.
/// pred holds gt.height * gt.width strictly positive values in any shape.
/// The root argument is clamped at zero; its gradient there is zero.
template <typename T>
Tensor<T> silog_loss(const Tensor<T>& pred, const DepthMap& gt, const LossConfig& cfg);

double silog_loss(const DepthMap& pred, const DepthMap& gt, const LossConfig& cfg);

}  // namespace md
