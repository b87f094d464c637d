#pragma once

#include <map>
#include <string>
#include <vector>

#include "md/param.hpp"

namespace md {

struct OptimConfig {
  double lr = 0.003;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double eta_min = 0.0;
  std::size_t epochs = 25;
  std::size_t batch_size = 32;

  void validate() const;
};

/// eta_min + (lr0 - eta_min) * (1 + cos(pi * step / total_steps)) / 2, for 0 <= step <= total_steps.
double cosine_lr(std::size_t step, std::size_t total_steps, double lr0, double eta_min);

struct Moments {
  std::vector<float> m;
  std::vector<float> v;
};

/// Decoupled-weight-decay Adam over the non-frozen parameters of a store.
class AdamW {
 public:
  explicit AdamW(const OptimConfig& config = {}) : config_(config) {}

  /// One update at learning rate lr. Parameters that are frozen, carry no
  /// grad, or are named in skip are left alone. Throws std::runtime_error
  /// naming the first parameter whose gradient holds a NaN or Inf.
  void step(ParamStore<float>& store, double lr, const std::vector<std::string>& skip = {});

  std::uint64_t steps_taken() const { return t_; }
  void set_steps_taken(std::uint64_t t) { t_ = t; }
  const std::map<std::string, Moments>& moments() const { return moments_; }
  std::map<std::string, Moments>& moments() { return moments_; }

 private:
  OptimConfig config_;
  std::uint64_t t_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace md
