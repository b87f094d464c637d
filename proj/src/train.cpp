#include "md/train.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <numeric>
#include <random>

#include "md/kernels.hpp"
#include "md/ops.hpp"
#include "md/rng.hpp"

namespace md {

MirrorMode parse_mirror_mode(const std::string& text) {
  if (text == "converged") return MirrorMode::converged;
  if (text == "disrupted") return MirrorMode::disrupted;
  throw ConfigError("unknown mirror mode '" + text + "' (expected converged or disrupted)");
}

std::string to_string(MirrorMode mode) { return mode == MirrorMode::converged ? "converged" : "disrupted"; }

std::size_t steps_per_epoch(std::size_t frames, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  return (frames + batch_size - 1) / batch_size;
}

std::vector<std::size_t> epoch_order(std::size_t frames, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(frames);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(derive_seed(seed, "epoch"), epoch));
  // Fisher-Yates with our own index draw so the order does not depend on the
  // standard library's shuffle.
  for (std::size_t i = frames; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::uint64_t disrupted_mirror_seed(std::uint64_t seed, std::size_t step) {
  return derive_seed(derive_seed(seed, "disrupted"), static_cast<std::uint64_t>(step));
}

Trainer::Trainer(DepthModel<float>& model, std::vector<Frame> frames, const TrainConfig& config)
    : model_(model), frames_(std::move(frames)), config_(config) {
  if (frames_.empty()) throw ConfigError("train: dataset is empty");
  config_.optim.validate();
  config_.loss.validate();
  state_.optimizer = AdamW(config_.optim);
  state_.seed = config_.seed;
  state_.mirror_mode = config_.mirror_mode;
  per_epoch_ = steps_per_epoch(frames_.size(), config_.optim.batch_size);
  total_steps_ = per_epoch_ * config_.optim.epochs;
  const std::size_t s = model_.config().vision.image_size;
  taps_.reserve(frames_.size());
  for (const auto& f : frames_) taps_.push_back(model_.image_taps(resize_image(f.rgb, s, s)));
}

Tensor<float> Trainer::frame_loss(std::size_t index, const Tensor<float>& cond) const {
  const DepthMap& gt = frames_[index].depth;
  const Tensor<float> depth = depth_from_logits(model_.logits(taps_[index], cond), gt.height, gt.width);
  return silog_loss(depth, gt, config_.loss);
}

double Trainer::batch_loss(const std::vector<std::size_t>& indices) {
  NoGradGuard guard;
  const Tensor<float> cond = model_.condition();
  double total = 0.0;
  for (auto i : indices) total += frame_loss(i, cond).item();
  return total / static_cast<double>(indices.size());
}

std::vector<DepthMap> Trainer::predict_all() const {
  NoGradGuard guard;
  const Tensor<float> cond = model_.condition();
  std::vector<DepthMap> out;
  out.reserve(frames_.size());
  for (std::size_t i = 0; i < frames_.size(); ++i) {
    const DepthMap& gt = frames_[i].depth;
    out.push_back(predict_depth(model_.logits(taps_[i], cond), gt.height, gt.width));
  }
  return out;
}

EpochRecord Trainer::evaluate_epoch(std::size_t epoch, double mean_loss) const {
  EpochRecord r;
  r.epoch = epoch;
  r.step = state_.step;
  r.mean_loss = mean_loss;
  if (config_.eval_each_epoch) {
    const auto preds = predict_all();
    std::vector<MetricsRecord> per_frame;
    for (std::size_t i = 0; i < frames_.size(); ++i) {
      per_frame.push_back(compute_metrics(preds[i], frames_[i].depth, CropSpec::none(), config_.loss.min_depth,
                                          config_.loss.max_depth));
    }
    r.train_metrics = aggregate_metrics(per_frame);
  }
  return r;
}

TrainLog Trainer::run(std::size_t max_steps, const std::function<void(const StepRecord&)>& on_step) {
  TrainLog log;
  const std::vector<std::string> skip_mirror{"mirror"};
  const bool disrupted = state_.mirror_mode == MirrorMode::disrupted;
  std::size_t cached_epoch = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> order;
  for (std::size_t taken = 0; taken < max_steps && state_.step < total_steps_; ++taken) {
    const std::size_t step = state_.step;
    const std::size_t epoch = step / per_epoch_;
    const std::size_t slot = step % per_epoch_;
    if (epoch != cached_epoch) {
      order = epoch_order(frames_.size(), state_.seed, epoch);
      cached_epoch = epoch;
    }
    const std::size_t begin = slot * config_.optim.batch_size;
    const std::size_t end = std::min(begin + config_.optim.batch_size, frames_.size());

    if (disrupted) randomize_mirror(model_.mirror(), disrupted_mirror_seed(state_.seed, step));
    const double lr = cosine_lr(step, total_steps_, config_.optim.lr, config_.optim.eta_min);

    model_.params().zero_grad();
    const Tensor<float> cond = model_.condition();
    Tensor<float> total;
    for (std::size_t b = begin; b < end; ++b) {
      const Tensor<float> l = frame_loss(order[b], cond);
      total = total.defined() ? add(total, l) : l;
    }
    const Tensor<float> loss = scale(total, 1.0f / static_cast<float>(end - begin));
    loss.backward();
    state_.optimizer.step(model_.params(), lr, disrupted ? skip_mirror : std::vector<std::string>{});
    state_.step = step + 1;

    const StepRecord rec{step, lr, static_cast<double>(loss.item())};
    log.steps.push_back(rec);
    if (on_step) on_step(rec);
    state_.epoch_loss_sum += rec.loss;
    if (slot + 1 == per_epoch_) {
      log.epochs.push_back(evaluate_epoch(epoch, state_.epoch_loss_sum / static_cast<double>(per_epoch_)));
      state_.epoch_loss_sum = 0.0;
    }
  }
  return log;
}

namespace {

std::vector<std::uint64_t> dims_of(const Shape& shape) { return {shape.begin(), shape.end()}; }

}  // namespace

Checkpoint make_checkpoint(const DepthModel<float>& model, const TrainState& state) {
  Checkpoint ck;
  for (const auto& p : model.params().all()) {
    const auto data = p.tensor.data();
    ck.put("param/" + p.name, dims_of(p.tensor.shape()), {data.begin(), data.end()});
  }
  for (const auto& [name, mom] : state.optimizer.moments()) {
    ck.put("adam.m/" + name, {mom.m.size()}, mom.m);
    ck.put("adam.v/" + name, {mom.v.size()}, mom.v);
  }
  ck.put_u64("adam.t", state.optimizer.steps_taken());
  ck.put_u64("train.step", state.step);
  ck.put_u64("train.seed", state.seed);
  ck.put_u64("train.mirror_mode", state.mirror_mode == MirrorMode::disrupted ? 1 : 0);
  ck.put_u64("train.epoch_loss_sum", std::bit_cast<std::uint64_t>(state.epoch_loss_sum));
  return ck;
}

void save_checkpoint(const DepthModel<float>& model, const TrainState& state, const std::filesystem::path& path) {
  make_checkpoint(model, state).save(path);
}

void restore_checkpoint(const Checkpoint& ck, DepthModel<float>& model, TrainState* state) {
  for (auto& p : model.params().all()) {
    const auto& e = ck.get("param/" + p.name);
    if (e.dtype != DType::f32 || e.dims != dims_of(p.tensor.shape())) {
      throw CheckpointError("checkpoint entry for '" + p.name + "' has the wrong shape");
    }
    std::copy(e.f32.begin(), e.f32.end(), p.tensor.mutable_data().begin());
  }
  if (!state) return;
  auto& moments = state->optimizer.moments();
  moments.clear();
  for (const auto& e : ck.entries()) {
    if (e.name.rfind("adam.m/", 0) == 0) {
      const std::string name = e.name.substr(7);
      moments[name].m = e.f32;
      moments[name].v = ck.get("adam.v/" + name).f32;
    }
  }
  state->optimizer.set_steps_taken(ck.get_u64("adam.t"));
  state->step = ck.get_u64("train.step");
  state->seed = ck.get_u64("train.seed");
  state->mirror_mode = ck.get_u64("train.mirror_mode") ? MirrorMode::disrupted : MirrorMode::converged;
  state->epoch_loss_sum = std::bit_cast<double>(ck.get_u64("train.epoch_loss_sum"));
}

void load_checkpoint(const std::filesystem::path& path, DepthModel<float>& model, TrainState* state) {
  restore_checkpoint(Checkpoint::load(path), model, state);
}

DepthMap infer(const DepthModel<float>& model, const Image& image) { return model.infer(image); }

EvalResolution parse_eval_resolution(const std::string& text) {
  if (text == "native") return EvalResolution::native;
  if (text == "model") return EvalResolution::model;
  throw ConfigError("unknown eval resolution '" + text + "' (expected native or model)");
}

std::string to_string(EvalResolution resolution) {
  return resolution == EvalResolution::native ? "native" : "model";
}

namespace {

DepthMap resize_prediction(const DepthMap& d, std::size_t size) {
  DepthMap out(size, size);
  kernels::omp::bilinear_resize<float>(d.depth, out.depth, 1, d.height, d.width, size, size);
  return out;
}

DepthMap resample_nearest(const DepthMap& d, std::size_t size) {
  DepthMap out(size, size);
  for (std::size_t y = 0; y < size; ++y) {
    const std::size_t sy = std::min(d.height - 1, (2 * y + 1) * d.height / (2 * size));
    for (std::size_t x = 0; x < size; ++x) {
      const std::size_t sx = std::min(d.width - 1, (2 * x + 1) * d.width / (2 * size));
      out.at(y, x) = d.at(sy, sx);
      out.valid[y * size + x] = d.valid[sy * d.width + sx];
    }
  }
  return out;
}

}  // namespace

std::vector<MetricsRecord> evaluate(const std::vector<DepthMap>& predictions, const std::vector<Frame>& frames,
                                    const EvalConfig& config, std::size_t model_size) {
  if (predictions.size() != frames.size()) throw DimensionError("evaluate: one prediction per frame required");
  std::vector<MetricsRecord> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const DepthMap& gt = frames[i].depth;
    if (config.resolution == EvalResolution::model && (gt.height != model_size || gt.width != model_size)) {
      out.push_back(compute_metrics(resize_prediction(predictions[i], model_size), resample_nearest(gt, model_size),
                                    config.crop, config.min_depth, config.max_depth));
    } else {
      out.push_back(compute_metrics(predictions[i], gt, config.crop, config.min_depth, config.max_depth));
    }
  }
  return out;
}

std::vector<DepthMap> predict_frames(const DepthModel<float>& model, const std::vector<Frame>& frames) {
  std::vector<DepthMap> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(model.infer(f.rgb));
  return out;
}

std::string loss_csv(const TrainLog& log) {
  std::string out = "step,lr,loss\n";
  char buf[96];
  for (const auto& r : log.steps) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g\n", r.step, r.lr, r.loss);
    out += buf;
  }
  return out;
}

std::string epochs_csv(const TrainLog& log) {
  std::string out = "epoch,step,mean_loss,abs_rel,rmse,d1\n";
  char buf[160];
  for (const auto& r : log.epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.step, r.mean_loss,
                  r.train_metrics.abs_rel, r.train_metrics.rmse, r.train_metrics.delta1);
    out += buf;
  }
  return out;
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
  std::string out = metrics_csv_header() + "\n";
  for (std::size_t i = 0; i < records.size(); ++i) out += metrics_csv_row(std::to_string(i), records[i]) + "\n";
  out += metrics_csv_row("mean", aggregate_metrics(records)) + "\n";
  return out;
}

}  // namespace md
