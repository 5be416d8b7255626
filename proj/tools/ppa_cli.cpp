// Command-line front end: dataset synthesis, model accuracy, normal
// estimation and contour benchmarks, and report merging.

#include <CLI11.hpp>
#include <iostream>

#include "ppa/errors.hpp"
#include "ppa/eval/commands.hpp"

namespace {

using ppa::eval::EvalConfig;

void add_eval_flags(CLI::App* cmd, EvalConfig& cfg, std::optional<double>& noise) {
  cmd->add_option("--dataset", cfg.dataset, "Dataset directory")->required();
  cmd->add_option("--out", cfg.out, "Output directory");
  cmd->add_option("--model", cfg.model, "opa, ppa or both")->check(CLI::IsMember({"opa", "ppa", "both"}));
  cmd->add_option("--dolp-threshold", cfg.dolp_threshold, "Pixels with DoLP at or below are masked");
  cmd->add_option("--blur-sigma", cfg.blur_sigma, "Gaussian blur of the polarization images (pixels)");
  cmd->add_option("--seed", cfg.seed, "Random seed");
  cmd->add_option("--views", cfg.views, "Views per multi-view system (K)");
  cmd->add_option("--trials", cfg.trials, "Multi-view trials");
  cmd->add_option("--noise-aolp-deg", noise, "AoLP noise for forward-model trials (degrees)");
  cmd->add_flag("--from-images", cfg.from_images, "Read synthetic views from disk instead of re-rendering");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perspective phase angle (PPA) evaluation tools"};
  app.require_subcommand(1);

  ppa::eval::SynthConfig synth;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic dataset");
  synth_cmd->add_option("--out", synth.out, "Dataset directory")->required();
  synth_cmd->add_option("--views", synth.views, "Number of views");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--scene", synth.scene, "random or contour")->check(CLI::IsMember({"random", "contour"}));
  synth_cmd->add_option("--noise-aolp-deg", synth.noise_aolp_deg, "AoLP noise (degrees)");
  synth_cmd->add_option("--noise-intensity", synth.noise_intensity, "Intensity noise (fraction of the mean)");
  synth_cmd->add_option("--width", synth.width, "Image width");
  synth_cmd->add_option("--height", synth.height, "Image height");

  EvalConfig acc_cfg, est_cfg, con_cfg;
  std::optional<double> acc_noise, est_noise, con_noise;
  auto* acc_cmd = app.add_subcommand("model-accuracy", "Per-pixel phase errors of the OPA and PPA models");
  add_eval_flags(acc_cmd, acc_cfg, acc_noise);
  acc_cmd->add_flag("--write-pixels", acc_cfg.write_pixels, "Also write per-pixel errors (large)");

  auto* est_cmd = app.add_subcommand("estimate", "Normal estimation benchmark");
  add_eval_flags(est_cmd, est_cfg, est_noise);
  est_cmd->add_option("--mode", est_cfg.mode, "single or multi")->check(CLI::IsMember({"single", "multi"}));
  est_cmd->add_flag("--sweep-views", est_cfg.sweep_views, "Evaluate every K from 2 to --max-views");
  est_cmd->add_option("--max-views", est_cfg.sweep_max_views, "Largest K of the sweep");

  auto* con_cmd = app.add_subcommand("contours", "Iso-depth versus PPA contour comparison");
  add_eval_flags(con_cmd, con_cfg, con_noise);
  con_cmd->add_option("--ref-view", con_cfg.ref_view, "View that owns the contours");
  con_cmd->add_option("--second-view", con_cfg.second_view, "View used with the reference for normals");
  con_cmd->add_option("--seeds", con_cfg.seeds, "Seeds along the board edge");
  con_cmd->add_option("--step", con_cfg.step_px, "Tracing step (pixels)");
  con_cmd->add_option("--window", con_cfg.window, "Half-size of the seed normal window (pixels)");

  std::vector<std::filesystem::path> inputs;
  std::filesystem::path report_out;
  auto* rep_cmd = app.add_subcommand("report", "Merge reports; exit status reflects the embedded checks");
  rep_cmd->add_option("inputs", inputs, "Report JSON files")->required();
  rep_cmd->add_option("--out", report_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      ppa::eval::cmd_synth(synth);
      return 0;
    }
    if (*rep_cmd) return ppa::eval::cmd_report(inputs, report_out);

    auto run = [](EvalConfig& cfg, const std::optional<double>& noise, auto fn) {
      cfg.noise_aolp_deg = noise;
      const auto data = ppa::eval::open_dataset(cfg.dataset);
      const auto report = fn(data, cfg);
      std::cout << report["summary"].dump(2) << '\n';
      return 0;
    };
    if (*acc_cmd) return run(acc_cfg, acc_noise, ppa::eval::run_model_accuracy);
    if (*est_cmd) return run(est_cfg, est_noise, ppa::eval::run_estimate);
    if (*con_cmd) return run(con_cfg, con_noise, ppa::eval::run_contours);
  } catch (const ppa::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
