#include "md/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "md/ablation.hpp"
#include "md/consistency.hpp"
#include "md/gradsuite.hpp"
#include "md/io.hpp"

namespace md {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigFlags {
  std::string preset = "toy";
  std::string config_path;
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--preset", preset, "toy or paper")->check(CLI::IsMember({"toy", "paper"}));
    app->add_option("--config", config_path, "config.resolved to start from instead of a preset");
    app->add_option("--set", overrides, "key=value override, repeatable");
  }

  RunConfig resolve() const {
    RunConfig c = config_path.empty() ? RunConfig::from_preset(preset) : RunConfig::load_resolved(config_path);
    c.apply(overrides);
    c.validate();
    return c;
  }
};

/// Appends rows to a CSV, writing the header only when the file is new.
void append_csv(const fs::path& path, const std::string& csv) {
  const bool exists = fs::exists(path);
  std::ofstream f(path, std::ios::binary | std::ios::app);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f << (exists ? csv.substr(csv.find('\n') + 1) : csv);
}

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return buf;
}

std::string with_commas(std::size_t n) {
  std::string digits = std::to_string(n), out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

void print_metrics(std::ostream& out, const std::string& label, const MetricsRecord& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s abs_rel=%.4f sq_rel=%.4f rmse=%.4f log10=%.4f d1=%.4f d2=%.4f d3=%.4f\n",
                label.c_str(), m.abs_rel, m.sq_rel, m.rmse, m.log10, m.delta1, m.delta2, m.delta3);
  out << buf;
}

int cmd_synth(const RunConfig& cfg, const fs::path& out_dir, std::ostream& out) {
  const auto frames = make_dataset(cfg.data);
  write_dataset(frames, out_dir);
  write_text(out_dir / "config.resolved", cfg.resolved());
  out << "wrote " << frames.size() << " frames to " << out_dir.string() << "\n";
  return 0;
}

struct TrainFlags {
  bool resume = false;
  std::optional<std::size_t> stop_after;
  std::string init_from;
};

int cmd_train(RunConfig cfg, const fs::path& run_dir, const TrainFlags& flags, std::ostream& out) {
  const fs::path ckpt = run_dir / "checkpoint.mdc";
  if (flags.resume) {
    cfg = RunConfig::load_resolved(run_dir / "config.resolved");
    cfg.validate();
  } else {
    fs::create_directories(run_dir);
    for (const char* name : {"loss.csv", "epochs.csv", "metrics.csv", "checkpoint.mdc"}) fs::remove(run_dir / name);
    write_text(run_dir / "config.resolved", cfg.resolved());
  }
  const auto frames = load_frames(cfg);
  DepthModel<float> model(cfg.model);
  if (!flags.init_from.empty()) load_checkpoint(flags.init_from, model, nullptr);
  Trainer trainer(model, frames, cfg.train);
  if (flags.resume) load_checkpoint(ckpt, model, &trainer.state());

  const TrainLog log = trainer.run(flags.stop_after.value_or(std::numeric_limits<std::size_t>::max()));
  append_csv(run_dir / "loss.csv", loss_csv(log));
  append_csv(run_dir / "epochs.csv", epochs_csv(log));
  save_checkpoint(model, trainer.state(), ckpt);

  const auto step = trainer.state().step;
  out << "step " << step << "/" << trainer.total_steps();
  if (!log.steps.empty()) out << " last loss " << log.steps.back().loss;
  out << "\n";
  if (step == trainer.total_steps()) {
    const auto per_frame = evaluate(predict_frames(model, frames), frames, cfg.eval, cfg.model.vision.image_size);
    write_text(run_dir / "metrics.csv", metrics_csv(per_frame));
    print_metrics(out, "train set", aggregate_metrics(per_frame));
  }
  return 0;
}

int cmd_infer(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& image, const fs::path& output,
              std::ostream& out) {
  DepthModel<float> model(cfg.model);
  load_checkpoint(checkpoint, model, nullptr);
  const DepthMap depth = infer(model, read_ppm(image));
  write_pfm(depth, output);
  out << "wrote " << depth.width << "x" << depth.height << " depth to " << output.string() << "\n";
  return 0;
}

DepthModel<float> load_model(const RunConfig& cfg, const std::string& checkpoint) {
  DepthModel<float> model(cfg.model);
  if (!checkpoint.empty()) load_checkpoint(checkpoint, model, nullptr);
  return model;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint, const fs::path& out_dir, std::ostream& out) {
  const auto frames = load_frames(cfg);
  const DepthModel<float> model = load_model(cfg, checkpoint);
  const auto preds = predict_frames(model, frames);
  const auto per_frame = evaluate(preds, frames, cfg.eval, cfg.model.vision.image_size);
  fs::create_directories(out_dir / "pred");
  write_text(out_dir / "config.resolved", cfg.resolved());
  write_text(out_dir / "metrics.csv", metrics_csv(per_frame));
  for (std::size_t i = 0; i < preds.size(); ++i) write_pfm(preds[i], out_dir / "pred" / (frame_name(i) + ".pfm"));
  print_metrics(out, "mean", aggregate_metrics(per_frame));
  return 0;
}

int cmd_consistency(const RunConfig& cfg, const std::string& checkpoint, const fs::path& out_dir, std::ostream& out) {
  const auto frames = load_frames(cfg);
  const DepthModel<float> model = load_model(cfg, checkpoint);
  const DepthModel<float> baseline(cfg.model);
  const auto preds = predict_frames(model, frames);
  const auto base_preds = predict_frames(baseline, frames);
  const auto rows = sequence_consistency(frames, preds, base_preds, cfg.consistency_window,
                                         ReprojectOptions{cfg.consistency_edge_threshold});
  std::vector<BBox> boxes;
  for (const auto& f : frames) boxes.insert(boxes.end(), f.boxes.begin(), f.boxes.end());
  const auto continuity = continuity_pairs(preds, boxes);

  fs::create_directories(out_dir);
  write_text(out_dir / "config.resolved", cfg.resolved());
  write_text(out_dir / "consistency.csv", consistency_csv(rows));
  write_text(out_dir / "continuity.csv", continuity_csv(continuity));

  double model_sum = 0.0, gt_sum = 0.0, random_sum = 0.0;
  for (const auto& r : rows) {
    model_sum += r.incons_model;
    gt_sum += r.incons_gt;
    random_sum += r.incons_random;
  }
  const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
  char buf[200];
  std::snprintf(buf, sizeof buf, "pairs=%zu incons_model=%.5f incons_gt=%.5f incons_random=%.5f boxes=%zu skipped=%zu\n",
                rows.size(), model_sum / n, gt_sum / n, random_sum / n, continuity.pairs.size(), continuity.skipped);
  out << buf;
  return 0;
}

struct AblateFlags {
  std::string study = "mirror";
  std::string init = "random";
  std::string from;
  std::size_t draws = 5;
};

int cmd_ablate(const RunConfig& cfg, const AblateFlags& flags, const fs::path& out_dir, std::ostream& out) {
  if (flags.study == "init" && flags.init == "checkpoint" && flags.from.empty()) {
    throw UsageError("--init checkpoint requires --from");
  }
  const auto frames = load_frames(cfg);
  std::vector<AblationRow> rows;
  if (flags.study == "mirror") {
    rows = mirror_ablation(cfg, frames, flags.draws);
  } else if (flags.study == "init") {
    std::optional<fs::path> from;
    if (flags.init == "checkpoint") from = flags.from;
    rows.push_back(init_ablation(cfg, frames, from));
  } else {
    rows = conditioning_ablation(cfg, frames);
  }
  fs::create_directories(out_dir);
  write_text(out_dir / "config.resolved", cfg.resolved());
  write_text(out_dir / ("ablation_" + flags.study + ".csv"), ablation_csv(rows));
  for (const auto& r : rows) print_metrics(out, r.setting, r.metrics);
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg, std::size_t entries, std::ostream& out) {
  bool passed = true;
  for (const auto& c : primitive_grad_suite()) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-4s %-34s max_rel_err=%.3e\n", c.report.passed ? "ok" : "FAIL", c.name.c_str(),
                  c.report.max_rel_error);
    out << buf;
    passed = passed && c.report.passed;
  }
  const GradCase model = model_grad_check(cfg.model, entries);
  out << format_report(model.report);
  passed = passed && model.report.passed;
  out << (passed ? "gradcheck passed\n" : "gradcheck FAILED\n");
  return passed ? 0 : 1;
}

int cmd_params(const RunConfig& cfg, std::ostream& out) {
  const DepthModel<float> model(cfg.model);
  out << with_commas(count_learnable_params(model.params())) << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mirror-conditioned monocular depth: synthetic data, training, evaluation", "mirrordepth"};
  app.require_subcommand(1);

  ConfigFlags synth_cfg, train_cfg, infer_cfg, eval_cfg, cons_cfg, ablate_cfg, grad_cfg, params_cfg;
  std::string out_dir, data_dir, checkpoint, image;
  TrainFlags train_flags;
  AblateFlags ablate_flags;
  std::size_t grad_entries = 4;

  auto* synth = app.add_subcommand("synth", "render a synthetic dataset");
  synth_cfg.attach(synth);
  synth->add_option("--out", out_dir, "dataset directory")->required();

  auto* train = app.add_subcommand("train", "train the mirror and the decoder");
  train_cfg.attach(train);
  train->add_option("--out", out_dir, "run directory")->required();
  train->add_option("--data", data_dir, "dataset directory (default: synthetic set from data.*)");
  train->add_flag("--resume", train_flags.resume, "continue the run in --out from its checkpoint");
  train->add_option("--stop-after", train_flags.stop_after, "optimizer steps to take in this invocation");
  train->add_option("--init-from", train_flags.init_from, "checkpoint whose parameter values seed the model");

  auto* inf = app.add_subcommand("infer", "predict depth for one PPM image");
  infer_cfg.attach(inf);
  inf->add_option("--checkpoint", checkpoint)->required();
  inf->add_option("--image", image, "input PPM")->required();
  inf->add_option("--out", out_dir, "output PFM")->required();

  auto* ev = app.add_subcommand("eval", "depth metrics over a dataset");
  eval_cfg.attach(ev);
  ev->add_option("--checkpoint", checkpoint, "trained checkpoint (default: untrained model)");
  ev->add_option("--data", data_dir, "dataset directory");
  ev->add_option("--out", out_dir, "output directory")->required();

  auto* cons = app.add_subcommand("consistency", "temporal inconsistency and box medians");
  cons_cfg.attach(cons);
  cons->add_option("--checkpoint", checkpoint, "trained checkpoint (default: untrained model)");
  cons->add_option("--data", data_dir, "dataset directory");
  cons->add_option("--out", out_dir, "output directory")->required();

  auto* abl = app.add_subcommand("ablate", "mirror, initialization or conditioning study");
  ablate_cfg.attach(abl);
  abl->add_option("--study", ablate_flags.study)->check(CLI::IsMember({"mirror", "init", "conditioning"}));
  abl->add_option("--init", ablate_flags.init)->check(CLI::IsMember({"random", "checkpoint"}));
  abl->add_option("--from", ablate_flags.from, "checkpoint for --init checkpoint");
  abl->add_option("--draws", ablate_flags.draws, "random mirrors per randomized row")->check(CLI::PositiveNumber);
  abl->add_option("--data", data_dir, "dataset directory");
  abl->add_option("--out", out_dir, "output directory")->required();

  auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient suite in 64-bit");
  grad_cfg.attach(grad);
  grad->add_option("--entries", grad_entries, "entries probed per model tensor (0: all)");

  auto* params = app.add_subcommand("params", "print the trainable parameter count");
  params_cfg.attach(params);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  auto resolve = [&](const ConfigFlags& flags) {
    RunConfig c = flags.resolve();
    if (!data_dir.empty()) {
      c.data_dir = data_dir;
      c.validate();
    }
    return c;
  };

  try {
    if (train->parsed() && train_flags.resume &&
        (!train_cfg.overrides.empty() || !train_cfg.config_path.empty() || !data_dir.empty())) {
      throw UsageError("--resume takes its configuration from the run directory");
    }
    if (synth->parsed()) return cmd_synth(resolve(synth_cfg), out_dir, out);
    if (train->parsed()) return cmd_train(resolve(train_cfg), out_dir, train_flags, out);
    if (inf->parsed()) return cmd_infer(resolve(infer_cfg), checkpoint, image, out_dir, out);
    if (ev->parsed()) return cmd_eval(resolve(eval_cfg), checkpoint, out_dir, out);
    if (cons->parsed()) return cmd_consistency(resolve(cons_cfg), checkpoint, out_dir, out);
    if (abl->parsed()) return cmd_ablate(resolve(ablate_cfg), ablate_flags, out_dir, out);
    if (grad->parsed()) return cmd_gradcheck(resolve(grad_cfg), grad_entries, out);
    if (params->parsed()) return cmd_params(resolve(params_cfg), out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace md
