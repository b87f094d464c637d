#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "md/config.hpp"

namespace md {

/// The frames a config points at: data.dir when set, otherwise the synthetic set.
std::vector<Frame> load_frames(const RunConfig& config);

struct TrainResult {
  TrainState state;
  TrainLog log;
  double initial_loss = 0.0;  // full training-set loss before the first step
  double final_loss = 0.0;    // and after the last
};

/// Optionally restores parameter values from a checkpoint, then trains to the
/// end of the schedule.
TrainResult train_model(DepthModel<float>& model, const std::vector<Frame>& frames, const RunConfig& config,
                        const std::optional<std::filesystem::path>& init_from = std::nullopt);

MetricsRecord evaluate_model(const DepthModel<float>& model, const std::vector<Frame>& frames,
                             const EvalConfig& config);

struct AblationRow {
  std::string setting;
  MetricsRecord metrics;
  double final_loss = 0.0;  // full training-set loss after training; 0 for rows without training
};

std::string ablation_csv(const std::vector<AblationRow>& rows);

/// Converged, Randomized (mean over `draws` fresh mirrors), Disrupted and
/// Disrupted-randomized rows, all on the training frames.
std::vector<AblationRow> mirror_ablation(const RunConfig& config, const std::vector<Frame>& frames,
                                         std::size_t draws);

/// One row trained from random initialization or from a checkpoint's parameter values.
AblationRow init_ablation(const RunConfig& config, const std::vector<Frame>& frames,
                          const std::optional<std::filesystem::path>& checkpoint);

/// FiLM against the similarity hook.
std::vector<AblationRow> conditioning_ablation(const RunConfig& config, const std::vector<Frame>& frames);

/// Seed of the k-th replacement mirror drawn by the randomized rows.
std::uint64_t randomized_mirror_seed(std::uint64_t seed, std::size_t k);

}  // namespace md
