// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <sstream>
#include <string>

#include "md/ablation.hpp"
#include "md/cli.hpp"
#include "md/consistency.hpp"
#include "md/gradsuite.hpp"
#include "md/kernels.hpp"
#include "md/io.hpp"
#include "md/rng.hpp"
#include "oracles.hpp"

using namespace md;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& text) { detail += (detail.empty() ? "" : "; ") + text; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  if (!o.pass) ++failures;
  std::printf("criterion %2d %s  %s: %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

bool bitwise_same(const std::vector<std::vector<float>>& a, const ParamStore<float>& store,
                  const std::function<bool(const Parameter<float>&)>& select, std::size_t* compared) {
  bool same = true;
  *compared = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& p = store.all()[i];
    if (!select(p)) continue;
    ++*compared;
    same = same && std::equal(a[i].begin(), a[i].end(), p.tensor.data().begin(), p.tensor.data().end(),
                              [](float x, float y) { return std::bit_cast<std::uint32_t>(x) == std::bit_cast<std::uint32_t>(y); });
  }
  return same;
}

std::vector<std::vector<float>> snapshot(const ParamStore<float>& store) {
  std::vector<std::vector<float>> out;
  for (const auto& p : store.all()) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "mirrordepth");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  return code;
}

std::string slurp(const fs::path& p) {
  const auto b = read_bytes(p);
  return {b.begin(), b.end()};
}

Outcome shape_chain() {
  const auto t0 = Clock::now();
  Outcome o;
  const ModelConfig cfg = ModelConfig::paper();
  DepthModel<float> model(cfg);
  Image img(352, 352);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>((i * 7919) % 256) / 255.0f;
  const auto vision = model.vision().encode(img);
  o.require(vision.taps.size() == 3, "three tapped hidden states");
  for (const auto& t : vision.taps) o.require(t.shape() == Shape{484, 768}, "tap shape 484x768");
  o.require(vision.final.shape() == Shape{484, 768}, "final hidden shape 484x768");
  o.require(model.mirror().m.shape() == Shape{64, 512}, "mirror 64x512");
  o.require(cfg.mirror_tokens + 2 == 66 && 66 <= cfg.text.max_positions, "prompt of 66 tokens");
  const Tensor<float> cond = model.condition();
  o.require(cond.shape() == Shape{512}, "conditioning vector of 512");
  const Tensor<float> logits = model.logits(vision.taps, cond);
  o.require(logits.shape() == Shape{1, 352, 352}, "logits 1x352x352");
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 60.0, "runtime under 1 min");
  o.note("taps 3x" + to_string(vision.taps.front().shape()) + ", cond " + to_string(cond.shape()) + ", logits " +
         to_string(logits.shape()));
  return o;
}

Outcome parameter_accounting() {
  Outcome o;
  std::string text;
  o.require(cli({"params", "--preset", "paper"}, &text) == 0, "params exits 0");
  std::string digits;
  for (char c : text) {
    if (c >= '0' && c <= '9') digits += c;
  }
  const std::size_t n = digits.empty() ? 0 : std::stoull(digits);
  o.require(n >= 1084000 && n <= 1106000, "count within [1,084,000, 1,106,000]");
  o.require(n == oracle::trainable_scalars(ModelConfig::paper()), "count equals the closed form");
  o.note("params --preset paper printed " + text.substr(0, text.find('\n')));
  return o;
}

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  Outcome o;
  double worst = 0.0;
  std::size_t cases = 0;
  for (const auto& c : primitive_grad_suite()) {
    o.require(c.report.passed, c.name);
    worst = std::max(worst, c.report.max_rel_error);
    ++cases;
  }
  const GradCase model = model_grad_check(ModelConfig::toy(), 4);
  o.require(model.report.passed, "toy model loss");
  o.require(seconds_since(t0) < 300.0, "runtime under 5 min");
  o.note(std::to_string(cases) + " primitive cases max rel err " + fmt("%.2e", worst) + ", toy model max rel err " +
         fmt("%.2e", model.report.max_rel_error) + " over " + std::to_string(model.report.leaves.size()) +
         " tensors");
  return o;
}

Outcome loss_properties() {
  Outcome o;
  DepthMap gt(16, 16);
  const auto g = normal_draw(gt.size(), 0.5, 11);
  for (std::size_t i = 0; i < gt.size(); ++i) gt.depth[i] = static_cast<float>(4.0 * std::exp(g[i]));
  auto tensor = [&](const DepthMap& m, double c) {
    std::vector<double> v(m.depth.begin(), m.depth.end());
    for (auto& x : v) x *= c;
    return Tensor<double>::from({m.height, m.width}, v);
  };
  const LossConfig cfg;
  const double zero = silog_loss(tensor(gt, 1.0), gt, cfg).item();
  o.require(zero == 0.0, "pred = gt gives 0");
  const double e = silog_loss(tensor(gt, std::exp(1.0)), gt, cfg).item();
  o.require(std::abs(e - 10.0 * std::sqrt(0.15)) <= 1e-5, "g = 1 gives 10 sqrt(0.15)");
  LossConfig one = cfg;
  one.lambda = 1.0;
  const DepthMap pred = [&] {
    DepthMap p(16, 16);
    const auto h = normal_draw(p.size(), 0.5, 12);
    for (std::size_t i = 0; i < p.size(); ++i) p.depth[i] = static_cast<float>(3.0 * std::exp(h[i]));
    return p;
  }();
  const double base = silog_loss(tensor(pred, 1.0), gt, one).item();
  double worst = 0.0;
  for (double c : {1e-2, 0.3, 2.0, 7.5, 1e3}) {
    worst = std::max(worst, std::abs(silog_loss(tensor(pred, c), gt, one).item() - base) / base);
  }
  o.require(worst <= 1e-5, "scale invariance at lambda = 1");
  o.note("g=1 loss " + fmt("%.7f", e) + ", worst scaled rel diff " + fmt("%.1e", worst));
  return o;
}

struct SharedRun {
  RunConfig cfg;
  std::vector<Frame> frames;
  std::unique_ptr<DepthModel<float>> model;
  TrainResult result;
  std::vector<std::vector<float>> initial;
  double seconds = 0.0;
};

SharedRun train_toy(MirrorMode mode) {
  SharedRun r;
  r.cfg = RunConfig::from_preset("toy");
  r.cfg.train.mirror_mode = mode;
  r.cfg.train.eval_each_epoch = false;
  r.frames = load_frames(r.cfg);
  r.model = std::make_unique<DepthModel<float>>(r.cfg.model);
  r.initial = snapshot(r.model->params());
  const auto t0 = Clock::now();
  r.result = train_model(*r.model, r.frames, r.cfg);
  r.seconds = seconds_since(t0);
  return r;
}

/// Mean training-set Abs Rel over fresh mirror draws; the trained mirror is restored afterwards.
double randomized_abs_rel(SharedRun& run, std::size_t draws) {
  auto& mirror = run.model->mirror();
  const std::vector<float> saved(mirror.m.data().begin(), mirror.m.data().end());
  double sum = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    randomize_mirror(mirror, randomized_mirror_seed(run.cfg.train.seed, k));
    sum += evaluate_model(*run.model, run.frames, run.cfg.eval).abs_rel;
  }
  std::copy(saved.begin(), saved.end(), mirror.m.mutable_data().begin());
  return sum / static_cast<double>(draws);
}

bool is_frozen_prior(const Parameter<float>& p) {
  return p.name.rfind("vision.", 0) == 0 || p.name.rfind("text.", 0) == 0 || p.name.find(".film") != std::string::npos;
}

Outcome frozen_prior(SharedRun& run) {
  Outcome o;
  const std::size_t steps = run.result.state.step;
  o.require(steps >= 200, "at least 200 steps");
  std::size_t compared = 0;
  o.require(bitwise_same(run.initial, run.model->params(), is_frozen_prior, &compared), "frozen tensors unchanged");
  std::size_t flagged = 0;
  for (const auto& p : run.model->params().all()) flagged += p.frozen;
  o.require(compared == flagged, "every frozen tensor is an encoder, special-token or FiLM tensor");
  std::size_t films = 0;
  for (const auto& p : run.model->params().all()) films += p.name.find(".film") != std::string::npos;
  o.require(films == 4 * run.cfg.model.decoder.film_count, "FiLM nets covered");
  o.note(std::to_string(compared) + " frozen tensors bitwise identical after " + std::to_string(steps) + " steps");
  return o;
}

Outcome overfit(SharedRun& run) {
  Outcome o;
  const double ratio = run.result.final_loss / run.result.initial_loss;
  const double abs_rel = evaluate_model(*run.model, run.frames, run.cfg.eval).abs_rel;
  o.require(run.frames.size() == 16, "16 frames");
  o.require(run.result.state.step <= 1000, "at most 1000 steps");
  o.require(ratio < 0.10, "final loss below 10% of initial");
  o.require(abs_rel < 0.10, "training-set Abs Rel below 0.10");
  o.require(run.seconds < 600.0, "runtime under 10 min");
  o.note(std::to_string(run.result.state.step) + " steps, loss " + fmt("%.4f", run.result.initial_loss) + " -> " +
         fmt("%.4f", run.result.final_loss) + " (" + fmt("%.1f", 100.0 * ratio) + "%), Abs Rel " +
         fmt("%.4f", abs_rel) + ", training " + fmt("%.0f", run.seconds) + " s");
  return o;
}

Outcome mirror_direction(SharedRun& converged) {
  Outcome o;
  constexpr std::size_t kDraws = 5;
  const double own = evaluate_model(*converged.model, converged.frames, converged.cfg.eval).abs_rel;
  const double randomized = randomized_abs_rel(converged, kDraws);
  const double increase = (randomized - own) / own;
  o.require(increase >= 0.20, "randomized mirror raises Abs Rel by at least 20%");

  SharedRun disrupted = train_toy(MirrorMode::disrupted);
  const double d_own = evaluate_model(*disrupted.model, disrupted.frames, disrupted.cfg.eval).abs_rel;
  const double d_randomized = randomized_abs_rel(disrupted, kDraws);
  const double change = std::abs(d_randomized - d_own) / d_own;
  o.require(change < 0.05, "disrupted model changes by less than 5%");
  constexpr std::size_t kWideDraws = 20;  // diagnostic only, not gated
  const double d_wide = randomized_abs_rel(disrupted, kWideDraws);
  o.note("converged " + fmt("%.4f", own) + " -> randomized " + fmt("%.4f", randomized) + " (" +
         fmt("%+.1f", 100.0 * increase) + "%); disrupted " + fmt("%.4f", d_own) + " -> " + fmt("%.4f", d_randomized) +
         " (" + fmt("%.1f", 100.0 * change) + "%), mean of " + std::to_string(kDraws) + " draws; " +
         std::to_string(kWideDraws) + "-draw mean " + fmt("%.4f", d_wide) + " (" +
         fmt("%.1f", 100.0 * std::abs(d_wide - d_own) / d_own) + "%)");
  return o;
}

Outcome metric_oracle() {
  Outcome o;
  double worst = 0.0;
  bool ordered = true;
  for (std::uint64_t k = 0; k < 100; ++k) {
    DepthMap gt(24, 32), pred(24, 32);
    const auto a = normal_draw(gt.size(), 0.6, derive_seed(500, k));
    const auto b = normal_draw(gt.size(), 0.6, derive_seed(600, k));
    for (std::size_t i = 0; i < gt.size(); ++i) {
      gt.depth[i] = static_cast<float>(3.0 * std::exp(a[i]));
      pred.depth[i] = static_cast<float>(3.0 * std::exp(b[i]));
      gt.valid[i] = (i * 31 + k) % 17 != 0;
    }
    const auto m = compute_metrics(pred, gt, CropSpec::none(), 1e-3, 10.0);
    const auto r = oracle::metrics(pred, gt, 1e-3, 10.0);
    for (double d : {m.abs_rel - r.abs_rel, m.sq_rel - r.sq_rel, m.rmse - r.rmse, m.log10 - r.log10,
                     m.delta1 - r.delta1, m.delta2 - r.delta2, m.delta3 - r.delta3}) {
      worst = std::max(worst, std::abs(d));
    }
    o.require(m.t == r.t, "pixel counts agree");
    ordered = ordered && m.delta1 <= m.delta2 && m.delta2 <= m.delta3;
  }
  o.require(worst <= 1e-6, "max deviation within 1e-6");
  o.require(ordered, "delta ordering");
  o.note("100 pairs, max deviation " + fmt("%.1e", worst));
  return o;
}

Outcome reprojection() {
  Outcome o;
  const Intrinsics k{64.0, 64.0, 32.0, 32.0};
  Pose forward;
  forward.translation = {0.0, 0.0, 1.0};
  const DepthMap warped = reproject_depth(DepthMap(64, 64, 10.0f), forward, k);
  const double centre = warped.is_valid(32, 32) ? warped.at(32, 32) : -1.0;
  o.require(std::abs(centre - 9.0) <= 1e-4, "9 m at the principal point");

  DepthMap noisy(64, 64);
  const auto g = normal_draw(noisy.size(), 0.3, 21);
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy.depth[i] = static_cast<float>(5.0 * std::exp(g[i]));
  const DepthMap same = reproject_depth(noisy, Pose::identity(), k, ReprojectOptions{0.0});
  o.require(same == noisy, "identity pose exact");

  SynthConfig s;
  s.scenes = 4;
  s.frames_per_scene = 5;
  const auto frames = make_dataset(s);
  std::vector<DepthMap> gt;
  for (const auto& f : frames) gt.push_back(f.depth);
  const auto rows = sequence_consistency(frames, gt, gt, 1);
  double mean = 0.0;
  for (const auto& r : rows) mean += r.incons_gt;
  mean /= static_cast<double>(rows.size());
  o.require(!rows.empty() && mean <= 1e-3, "gt self-inconsistency within 1e-3");
  o.note("centre depth " + fmt("%.6f", centre) + ", gt self-inconsistency " + fmt("%.2e", mean) + " over " +
         std::to_string(rows.size()) + " pairs");
  return o;
}

Outcome replay() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "md_acceptance_replay";
  fs::remove_all(root);
  const std::vector<std::string> tiny{"--set", "data.scenes=2", "--set", "data.frames_per_scene=3", "--set",
                                      "optim.epochs=3", "--set", "optim.batch_size=2"};
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.end(), tiny.begin(), tiny.end());
    return a;
  };
  o.require(cli(with({"train", "--out", (root / "a").string()})) == 0, "first run");
  const std::string cfg = (root / "a" / "config.resolved").string();
  o.require(cli({"train", "--config", cfg, "--out", (root / "b").string()}) == 0, "replay from config.resolved");
  o.require(cli({"train", "--config", cfg, "--out", (root / "c").string(), "--stop-after", "4"}) == 0, "partial run");
  o.require(cli({"train", "--out", (root / "c").string(), "--resume"}) == 0, "resume");
  std::size_t files = 0;
  for (const char* f : {"config.resolved", "checkpoint.mdc", "loss.csv", "epochs.csv", "metrics.csv"}) {
    const std::string a = slurp(root / "a" / f);
    o.require(a == slurp(root / "b" / f), std::string(f) + " identical on replay");
    o.require(a == slurp(root / "c" / f), std::string(f) + " identical after resume");
    ++files;
  }
  fs::remove_all(root);
  o.note(std::to_string(files) + " artifacts bitwise equal across replay and stop/resume");
  return o;
}

}  // namespace

int main() {
  std::printf("acceptance: %d OpenMP threads\n", kernels::thread_count());
  std::fflush(stdout);
  report(1, "shape chain (paper preset)", shape_chain);
  report(2, "parameter accounting", parameter_accounting);
  report(3, "gradient correctness", gradient_correctness);

  SharedRun converged;
  bool trained = false;
  auto ensure_trained = [&] {
    if (!trained) converged = train_toy(MirrorMode::converged);
    trained = true;
  };
  report(4, "frozen prior", [&] {
    ensure_trained();
    return frozen_prior(converged);
  });
  report(5, "loss properties", loss_properties);
  report(6, "overfit convergence", [&] {
    ensure_trained();
    return overfit(converged);
  });
  report(7, "mirror ablation direction", [&] {
    ensure_trained();
    return mirror_direction(converged);
  });
  report(8, "metric oracle", metric_oracle);
  report(9, "reprojection analytics", reprojection);
  report(10, "determinism and replay", replay);
  std::printf("acceptance: %d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
