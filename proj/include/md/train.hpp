#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "md/camera.hpp"
#include "md/io.hpp"
#include "md/loss.hpp"
#include "md/metrics.hpp"
#include "md/model.hpp"
#include "md/optim.hpp"

namespace md {

enum class MirrorMode { converged, disrupted };

MirrorMode parse_mirror_mode(const std::string& text);
std::string to_string(MirrorMode mode);

struct TrainConfig {
  OptimConfig optim;
  LossConfig loss;
  MirrorMode mirror_mode = MirrorMode::converged;
  std::uint64_t seed = 0;
  bool eval_each_epoch = true;
};

struct StepRecord {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;  // optimizer steps completed
  double mean_loss = 0.0;
  MetricsRecord train_metrics;  // aggregate over the training frames
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
};

struct TrainState {
  std::uint64_t step = 0;
  AdamW optimizer;
  std::uint64_t seed = 0;
  MirrorMode mirror_mode = MirrorMode::converged;
  double epoch_loss_sum = 0.0;  // losses of the current epoch's finished steps
};

std::size_t steps_per_epoch(std::size_t frames, std::size_t batch_size);

/// Frame visiting order of one epoch, a pure function of (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t frames, std::uint64_t seed, std::size_t epoch);

/// Seed of the mirror draw used at a disrupted-mode step.
std::uint64_t disrupted_mirror_seed(std::uint64_t seed, std::size_t step);

/// Mini-batch AdamW over the mirror and the decoder with a per-step cosine
/// schedule. Vision taps are computed once per frame since the tower is frozen.
class Trainer {
 public:
  Trainer(DepthModel<float>& model, std::vector<Frame> frames, const TrainConfig& config);

  std::size_t total_steps() const { return total_steps_; }
  TrainState& state() { return state_; }
  const TrainState& state() const { return state_; }

  /// Runs until the schedule ends or max_steps more steps have been taken.
  TrainLog run(std::size_t max_steps = std::numeric_limits<std::size_t>::max(),
               const std::function<void(const StepRecord&)>& on_step = {});

  /// Loss of one batch without touching parameters or moments.
  double batch_loss(const std::vector<std::size_t>& indices);

  /// Predictions for the training frames at their gt size.
  std::vector<DepthMap> predict_all() const;

 private:
  Tensor<float> frame_loss(std::size_t index, const Tensor<float>& cond) const;
  EpochRecord evaluate_epoch(std::size_t epoch, double mean_loss) const;

  DepthModel<float>& model_;
  std::vector<Frame> frames_;
  std::vector<std::vector<Tensor<float>>> taps_;
  TrainConfig config_;
  TrainState state_;
  std::size_t per_epoch_ = 0;
  std::size_t total_steps_ = 0;
};

/// Every parameter, the AdamW moments, and the replay state.
Checkpoint make_checkpoint(const DepthModel<float>& model, const TrainState& state);
void save_checkpoint(const DepthModel<float>& model, const TrainState& state, const std::filesystem::path& path);

/// Restores parameter values (names must match, shapes must agree). When
/// state is given, the optimizer and replay fields are restored too.
void restore_checkpoint(const Checkpoint& ck, DepthModel<float>& model, TrainState* state);
void load_checkpoint(const std::filesystem::path& path, DepthModel<float>& model, TrainState* state);

/// Inference on one image; output matches the image size.
DepthMap infer(const DepthModel<float>& model, const Image& image);

enum class EvalResolution { native, model };
EvalResolution parse_eval_resolution(const std::string& text);
std::string to_string(EvalResolution resolution);

struct EvalConfig {
  CropSpec crop;
  double min_depth = 1e-3;
  double max_depth = kIndoorDepthCap;
  EvalResolution resolution = EvalResolution::native;
};

/// Per-frame metrics of predictions against the frames' ground truth.
std::vector<MetricsRecord> evaluate(const std::vector<DepthMap>& predictions, const std::vector<Frame>& frames,
                                    const EvalConfig& config, std::size_t model_size);

std::vector<DepthMap> predict_frames(const DepthModel<float>& model, const std::vector<Frame>& frames);

std::string loss_csv(const TrainLog& log);
std::string epochs_csv(const TrainLog& log);
std::string metrics_csv(const std::vector<MetricsRecord>& records);

}  // namespace md
