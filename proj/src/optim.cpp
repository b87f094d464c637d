#include "md/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace md {

void OptimConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("optim.lr must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("optim.weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optim betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("optim.eps must be positive");
  if (!(eta_min >= 0.0 && eta_min <= lr)) throw ConfigError("optim.eta_min must lie in [0, lr]");
  if (epochs == 0 || batch_size == 0) throw ConfigError("optim.epochs and optim.batch_size must be positive");
}

double cosine_lr(std::size_t step, std::size_t total_steps, double lr0, double eta_min) {
  if (total_steps == 0 || step > total_steps) {
    throw ContractError("cosine_lr: step " + std::to_string(step) + " outside [0, " + std::to_string(total_steps) + "]");
  }
  const double phase = std::numbers::pi * static_cast<double>(step) / static_cast<double>(total_steps);
  return eta_min + (lr0 - eta_min) * (1.0 + std::cos(phase)) / 2.0;
}

void AdamW::step(ParamStore<float>& store, double lr, const std::vector<std::string>& skip) {
  auto updates = [&](const Parameter<float>& p) {
    return !p.frozen && p.tensor.requires_grad() && std::find(skip.begin(), skip.end(), p.name) == skip.end();
  };
  for (const auto& p : store.all()) {
    if (!updates(p)) continue;
    for (float g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw std::runtime_error("AdamW: non-finite gradient in parameter '" + p.name + "'");
    }
  }
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double decay = 1.0 - lr * config_.weight_decay;
  for (auto& p : store.all()) {
    if (!updates(p)) continue;
    auto data = p.tensor.mutable_data();
    const auto grad = p.tensor.grad();
    auto& mom = moments_[p.name];
    if (mom.m.size() != data.size()) {
      mom.m.assign(data.size(), 0.0f);
      mom.v.assign(data.size(), 0.0f);
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = grad[i];
      const double m = b1 * mom.m[i] + (1.0 - b1) * g;
      const double v = b2 * mom.v[i] + (1.0 - b2) * g * g;
      mom.m[i] = static_cast<float>(m);
      mom.v[i] = static_cast<float>(v);
      const double m_hat = m / correction1;
      const double v_hat = v / correction2;
      data[i] = static_cast<float>(data[i] * decay - lr * m_hat / (std::sqrt(v_hat) + config_.eps));
    }
  }
}

}  // namespace md
