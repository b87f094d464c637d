#include "md/ablation.hpp"

#include <cstdio>
#include <numeric>

#include "md/io.hpp"
#include "md/rng.hpp"

namespace md {

std::vector<Frame> load_frames(const RunConfig& config) {
  if (!config.data_dir.empty()) return read_dataset(config.data_dir);
  return make_dataset(config.data);
}

TrainResult train_model(DepthModel<float>& model, const std::vector<Frame>& frames, const RunConfig& config,
                        const std::optional<std::filesystem::path>& init_from) {
  if (init_from) load_checkpoint(*init_from, model, nullptr);
  Trainer trainer(model, frames, config.train);
  std::vector<std::size_t> all(frames.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  TrainResult r;
  r.initial_loss = trainer.batch_loss(all);
  r.log = trainer.run();
  r.final_loss = trainer.batch_loss(all);
  r.state = trainer.state();
  return r;
}

MetricsRecord evaluate_model(const DepthModel<float>& model, const std::vector<Frame>& frames,
                             const EvalConfig& config) {
  return aggregate_metrics(
      evaluate(predict_frames(model, frames), frames, config, model.config().vision.image_size));
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "setting,abs_rel,sq_rel,rmse,log10,d1,d2,d3,final_loss\n";
  char buf[64];
  for (const auto& row : rows) {
    std::string line = metrics_csv_row(row.setting, row.metrics);
    line.erase(line.rfind(','));  // pixel count
    std::snprintf(buf, sizeof buf, ",%.9g\n", row.final_loss);
    out += line + buf;
  }
  return out;
}

std::uint64_t randomized_mirror_seed(std::uint64_t seed, std::size_t k) {
  return derive_seed(derive_seed(seed, "randomized"), static_cast<std::uint64_t>(k));
}

namespace {

MetricsRecord randomized_metrics(DepthModel<float>& model, const std::vector<Frame>& frames, const RunConfig& config,
                                 std::size_t draws) {
  const auto data = model.mirror().m.data();
  const std::vector<float> saved(data.begin(), data.end());
  std::vector<MetricsRecord> per_draw;
  for (std::size_t k = 0; k < draws; ++k) {
    randomize_mirror(model.mirror(), randomized_mirror_seed(config.train.seed, k));
    per_draw.push_back(evaluate_model(model, frames, config.eval));
  }
  std::copy(saved.begin(), saved.end(), model.mirror().m.mutable_data().begin());
  return aggregate_metrics(per_draw);
}

}  // namespace

std::vector<AblationRow> mirror_ablation(const RunConfig& config, const std::vector<Frame>& frames,
                                         std::size_t draws) {
  std::vector<AblationRow> rows;
  {
    RunConfig c = config;
    c.train.mirror_mode = MirrorMode::converged;
    DepthModel<float> model(c.model);
    const TrainResult r = train_model(model, frames, c);
    rows.push_back({"converged", evaluate_model(model, frames, c.eval), r.final_loss});
    rows.push_back({"randomized", randomized_metrics(model, frames, c, draws), 0.0});
  }
  {
    RunConfig c = config;
    c.train.mirror_mode = MirrorMode::disrupted;
    DepthModel<float> model(c.model);
    const TrainResult r = train_model(model, frames, c);
    rows.push_back({"disrupted", evaluate_model(model, frames, c.eval), r.final_loss});
    rows.push_back({"disrupted_randomized", randomized_metrics(model, frames, c, draws), 0.0});
  }
  return rows;
}

AblationRow init_ablation(const RunConfig& config, const std::vector<Frame>& frames,
                          const std::optional<std::filesystem::path>& checkpoint) {
  DepthModel<float> model(config.model);
  const TrainResult r = train_model(model, frames, config, checkpoint);
  return {checkpoint ? "checkpoint" : "random", evaluate_model(model, frames, config.eval), r.final_loss};
}

std::vector<AblationRow> conditioning_ablation(const RunConfig& config, const std::vector<Frame>& frames) {
  std::vector<AblationRow> rows;
  for (const Conditioning kind : {Conditioning::film, Conditioning::similarity}) {
    RunConfig c = config;
    c.model.decoder.conditioning = kind;
    DepthModel<float> model(c.model);
    const TrainResult r = train_model(model, frames, c);
    rows.push_back({to_string(kind), evaluate_model(model, frames, c.eval), r.final_loss});
  }
  return rows;
}

}  // namespace md
