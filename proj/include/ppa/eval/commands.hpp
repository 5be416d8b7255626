#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ppa/eval/dataset.hpp"
#include "ppa/eval/report.hpp"
#include "ppa/phase_models.hpp"

namespace ppa::eval {

inline constexpr const char* kToolVersion = "ppa 1.0.0";

struct SynthConfig {
  std::filesystem::path out;
  std::size_t views = 282;
  std::uint64_t seed = 7;
  /// "random": poses sampled over the board; "contour": a reference view
  /// tilted 40 degrees at 500 mm plus a second view for normal estimation.
  std::string scene = "random";
  double noise_aolp_deg = 0.0;
  double noise_intensity = 0.0;
  int width = 640, height = 480;

  void validate() const;
  json to_json() const;
};

struct EvalConfig {
  std::filesystem::path dataset;
  std::filesystem::path out;  // empty: nothing written
  std::string model = "both";
  double dolp_threshold = 0.1;
  double blur_sigma = 1.0;
  int views = 3;
  int trials = 1000;
  std::uint64_t seed = 7;
  /// AoLP noise for forward-model trials; the dataset's own level if unset.
  std::optional<double> noise_aolp_deg;
  std::string mode = "multi";
  bool sweep_views = false;
  int sweep_max_views = 20;
  bool from_images = false;
  bool write_pixels = false;
  int ref_view = 0;
  int second_view = -1;  // -1: widest-baseline view
  int seeds = 20;
  double step_px = 0.5;
  int window = 7;  // half-size of the pixel window used for seed normals
  double condition_threshold = 1e-6;

  void validate() const;
  std::vector<ModelKind> models() const;
  json to_json() const;
};

SceneSpec make_scene(const SynthConfig& cfg);
/// Board tilted 40 degrees in front of a 500 mm reference view, with a
/// second view for two-view normal estimation.
SceneSpec contour_scene(const Intrinsicsd& k, double noise_aolp_rad, std::uint64_t seed);

void cmd_synth(const SynthConfig& cfg);

json run_model_accuracy(const Dataset& data, const EvalConfig& cfg);
json run_estimate(const Dataset& data, const EvalConfig& cfg);
json run_contours(const Dataset& data, const EvalConfig& cfg);

/// Merges the input reports into `out`/report.json; returns 0 iff every
/// embedded check passes.
int cmd_report(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out);

}  // namespace ppa::eval
