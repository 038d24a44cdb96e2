#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "mfn/commands.hpp"

namespace {

using namespace mfn;

struct CommonFlags {
  std::optional<std::string> config_path;
  std::optional<double> evidence_weight, factor_weight, lambda, alpha;
  std::optional<int> hidden_p;
  std::optional<std::string> schedule;
  std::optional<std::uint64_t> seed, max_iterations;
  std::optional<bool> rollback;
  std::optional<std::string> model_dir;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "run configuration json");
  cmd->add_option("--evidence-weight", f.evidence_weight,
                  "weight of evidence factors");
  cmd->add_option("--factor-weight", f.factor_weight,
                  "weight of memory factors");
  cmd->add_option("--schedule", f.schedule, "serial or simul:<fraction>");
  cmd->add_option("--lambda", f.lambda, "subspace confidence trade-off");
  cmd->add_option("--alpha", f.alpha,
                  "subspace satisfaction threshold (<0: auto-scale)");
  cmd->add_option("--hidden-p", f.hidden_p, "hidden dimension for nmf/pca");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--max-iterations", f.max_iterations,
                  "iteration cap (0 = 10x factor count)");
  cmd->add_option("--model-dir", f.model_dir, "model directory");
}

RunConfig config_from(const CommonFlags& f) {
  RunConfig c;
  if (f.config_path) c = load_config(*f.config_path);
  if (f.evidence_weight) c.evidence_weight = *f.evidence_weight;
  if (f.factor_weight) c.factor_weight = *f.factor_weight;
  if (f.schedule) c.schedule = *f.schedule;
  if (f.lambda) c.lambda = *f.lambda;
  if (f.alpha) c.alpha = *f.alpha;
  if (f.hidden_p) c.hidden_p = *f.hidden_p;
  if (f.seed) c.seed = *f.seed;
  if (f.max_iterations) c.max_iterations = *f.max_iterations;
  if (f.rollback) c.rollback = *f.rollback;
  if (f.model_dir) c.model_dir = *f.model_dir;
  return c;
}

void print_metrics(const Metrics& m) {
  std::printf("iterations=%llu opinion_updates=%llu votes=%llu rollbacks=%llu%s\n",
              static_cast<unsigned long long>(m.iterations),
              static_cast<unsigned long long>(m.opinion_updates),
              static_cast<unsigned long long>(m.votes_cast),
              static_cast<unsigned long long>(m.rollbacks),
              m.converged ? "" : " (did not converge)");
  if (m.mse > 0.0 || m.l1_total > 0.0 || m.perfect_restore)
    std::printf("mse=%.6f l1_total=%.1f l1_per_pixel_channel=%.4f perfect=%d\n",
                m.mse, m.l1_total, m.l1_per_pixel_channel,
                m.perfect_restore ? 1 : 0);
  if (m.accuracy >= 0.0) std::printf("accuracy=%.4f\n", m.accuracy);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memory factor networks: training and inference"};
  app.require_subcommand(1);

  // gen
  GenOptions gen;
  auto* cgen = app.add_subcommand("gen", "write a synthetic dataset");
  cgen->add_option("--kind", gen.kind, "faces | textures | digits | music")
      ->required();
  cgen->add_option("--out", gen.out_dir, "output directory")->required();
  cgen->add_option("--count", gen.count, "number of samples");
  cgen->add_option("--width", gen.width, "image width");
  cgen->add_option("--height", gen.height, "image height");
  cgen->add_option("--seconds", gen.seconds, "clip length (music)");
  cgen->add_option("--rate", gen.sample_rate, "sample rate (music)");
  cgen->add_option("--seed", gen.seed, "random seed");

  // train
  CommonFlags train_flags;
  std::string train_data;
  auto* ctrain = app.add_subcommand("train", "train payloads for a layout");
  add_common(ctrain, train_flags);
  ctrain->add_option("--data", train_data, "training data directory")
      ->required();

  // infer
  CommonFlags infer_flags;
  InferOptions infer;
  std::string erase_spec;
  auto* cinfer = app.add_subcommand("infer", "reconstruct an input");
  add_common(cinfer, infer_flags);
  cinfer->add_option("--input", infer.input_path, "input image or wav")
      ->required();
  cinfer->add_option("--output", infer.output_path, "output artifact")
      ->required();
  std::string mask_path, original_path, trace_path;
  cinfer->add_option("--mask", mask_path, "mask image (0 = missing)");
  cinfer->add_option("--original", original_path, "ground truth for metrics");
  cinfer->add_option("--trace", trace_path, "write per-iteration csv");
  cinfer->add_option("--erase-frames", erase_spec,
                     "spectrogram frames a:b given no evidence");
  cinfer->add_flag("--two-pass", infer.two_pass,
                   "denoise protocol: heavy evidence, then re-run at 0.01");
  cinfer->add_flag("--match-gray", infer.match_gray,
                   "scale colorized output to the gray evidence");
  cinfer->add_option("--jobs", infer.jobs, "worker threads");

  // classify
  CommonFlags cls_flags;
  std::string cls_data, cls_out = "predictions.csv";
  int cls_jobs = 0;
  auto* ccls = app.add_subcommand("classify", "label digit images");
  add_common(ccls, cls_flags);
  ccls->add_option("--data", cls_data, "digit image directory")->required();
  ccls->add_option("--output", cls_out, "predictions csv");
  ccls->add_option("--jobs", cls_jobs, "worker threads");

  // benchmark-restore
  CommonFlags bench_flags;
  std::string bench_data;
  BenchmarkOptions bench;
  auto* cbench = app.add_subcommand(
      "benchmark-restore", "corrupt stored images and measure restoration");
  add_common(cbench, bench_flags);
  cbench->add_option("--data", bench_data, "stored image directory")
      ->required();
  cbench->add_option("--out", bench.out_dir, "output directory")->required();
  cbench->add_option("--trials", bench.n_trials, "trial count");
  cbench->add_option("--noise-sigma", bench.noise_sigma,
                     "gaussian noise sigma (bytes)");
  cbench->add_option("--blob-pixels", bench.blob_pixels,
                     "erased blob size in pixels");
  cbench->add_option("--bench-seed", bench.seed, "trial seed");
  cbench->add_option("--jobs", bench.jobs, "worker threads");

  // eval
  std::string eval_a, eval_b, eval_out;
  auto* ceval = app.add_subcommand("eval", "compare two images");
  ceval->add_option("--original", eval_a, "")->required();
  ceval->add_option("--reconstruction", eval_b, "")->required();
  ceval->add_option("--output", eval_out, "metrics csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (cgen->parsed()) {
      cmd_gen(gen);
      std::printf("wrote %zu %s samples to %s\n", gen.count, gen.kind.c_str(),
                  gen.out_dir.c_str());
    } else if (ctrain->parsed()) {
      TrainReport r = cmd_train(config_from(train_flags), train_data);
      std::printf("trained %zu payloads from %zu items into %s\n", r.payloads,
                  r.training_items, r.model_dir.c_str());
    } else if (cinfer->parsed()) {
      if (!mask_path.empty()) infer.mask_path = mask_path;
      if (!original_path.empty()) infer.original_path = original_path;
      if (!trace_path.empty()) infer.trace_path = trace_path;
      if (!erase_spec.empty()) {
        auto colon = erase_spec.find(':');
        if (colon == std::string::npos)
          throw ValidationError("--erase-frames expects a:b");
        infer.erase_frames = {std::stoul(erase_spec.substr(0, colon)),
                              std::stoul(erase_spec.substr(colon + 1))};
      }
      InferReport r = cmd_infer(config_from(infer_flags), infer);
      if (!r.any_evidence) {
        std::fprintf(stderr,
                     "no evidence attached; every variable is unknown\n");
        return kExitNonConverged;
      }
      print_metrics(r.metrics);
      if (r.unknown_variables > 0)
        std::printf("unknown_variables=%zu\n", r.unknown_variables);
      if (!r.metrics.converged) return kExitNonConverged;
    } else if (ccls->parsed()) {
      ClassifyReport r =
          cmd_classify(config_from(cls_flags), cls_data, cls_out, cls_jobs);
      print_metrics(r.metrics);
      std::printf("mean_iterations=%.2f mean_opinion_updates=%.2f\n",
                  r.mean_iterations, r.mean_opinion_updates);
    } else if (cbench->parsed()) {
      BenchmarkReport r =
          cmd_benchmark_restore(config_from(bench_flags), bench_data, bench);
      std::printf("trials=%zu perfect=%.3f l1_ok=%.3f mean_l1=%.2f "
                  "mean_l1_per_pixel_channel=%.4f rollback_rate=%.4f\n",
                  r.trials, r.fraction_perfect, r.fraction_l1_ok,
                  r.mean.l1_total, r.mean.l1_per_pixel_channel,
                  r.rollback_rate);
    } else if (ceval->parsed()) {
      Metrics m = cmd_eval(eval_a, eval_b);
      print_metrics(m);
      if (!eval_out.empty()) write_metrics_csv(m, eval_out);
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const NonConvergedError& e) {
    std::fprintf(stderr, "did not converge: %s\n", e.what());
    return kExitNonConverged;
  }
  return kExitOk;
}
