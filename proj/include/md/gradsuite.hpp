#pragma once

#include <string>
#include <vector>

#include "md/gradcheck.hpp"
#include "md/model.hpp"

namespace md {

struct GradCase {
  std::string name;
  GradCheckReport report;
};

inline constexpr double kProbeStd = 0.2;

/// Options used by the suite: 64-bit, step 3e-5, relative tolerance 1e-3.
GradCheckOptions suite_options();

/// Every differentiable primitive at one or more shapes, each reduced to a
/// scalar through a fixed random weighting.
std::vector<GradCase> primitive_grad_suite(const GradCheckOptions& options = suite_options());

/// Full model loss (mirror and every trainable decoder tensor) on one
/// synthetic frame, in 64-bit. Trainable values are first offset by
/// normal(0, probe_std) noise: at the σ=0.02 initialization the deep decoder
/// gradients sit near 1e-7, below what central differences resolve.
GradCase model_grad_check(const ModelConfig& config, std::size_t entries_per_leaf, double probe_std = kProbeStd,
                          const GradCheckOptions& options = suite_options());

}  // namespace md
