#pragma once

#include <cstdint>
#include <vector>

#include "ppa/camera.hpp"
#include "ppa/geometry.hpp"
#include "ppa/image.hpp"
#include "ppa/polarization.hpp"

namespace ppa {

enum class DolpMode { Constant, SpecularFresnel };

struct NoiseSpec {
  double intensity_sigma = 0.0;  // fraction of the average intensity
  double aolp_sigma = 0.0;       // radians, added to the phase before synthesis
};

/// Planar polarization scene seen by a set of perspective cameras.
struct SceneSpec {
  Board board;
  std::vector<Posed> poses;
  Intrinsicsd intrinsics;
  DolpMode dolp_mode = DolpMode::Constant;
  double dolp_constant = 0.5;
  double refractive_index = 1.5;
  /// Offset between the polarization direction and the PPA phase (0 or pi/2).
  double aolp_shift = 0.0;
  double intensity_avg = 0.4;
  /// Unpolarized light added on top of the board's reflection.
  double ambient_floor = 0.0;
  /// Unpolarized intensity of pixels that miss the board.
  double background = 0.1;
  NoiseSpec noise;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Ground-truth layers share the mask of pixels that see the board and have
/// a defined phase.
struct RenderedView {
  PolarizationFrame<double> frame;
  ScalarMap<double> gt_aolp, gt_dolp, gt_depth;
  Unit3d normal_world, normal_camera;
  Posed pose;
};

/// Specular-reflection DoLP for incidence angle `zenith` and refractive
/// index `eta`.
double specular_dolp(double zenith, double refractive_index);

RenderedView render_view(const SceneSpec& spec, std::size_t pose_index);

/// World-to-camera rotation looking from `center` towards `target`, with
/// image x aligned to `right_hint` and then rolled by `roll` radians.
Posed look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target, const Eigen::Vector3d& right_hint,
              double roll = 0.0);

/// Fraction of a regular grid of board points that projects inside the
/// image in front of the camera.
double board_visibility(const Board& board, const Intrinsicsd& k, const Posed& pose, int grid = 21);

struct PoseSampling {
  double min_distance_mm = 350.0;
  double max_distance_mm = 800.0;
  /// Largest angle between the board normal and the direction to the camera.
  double max_tilt = 1.0471975511965976;
  double min_visibility = 0.5;
};

/// Seeded camera poses on a spherical cap over the board, each aimed at a
/// point on the board and seeing at least `min_visibility` of it.
std::vector<Posed> sample_poses(const Board& board, const Intrinsicsd& k, std::size_t count,
                                const PoseSampling& ranges, std::uint64_t seed);

/// 86.6 degree horizontal field of view at 640x480.
Intrinsicsd default_intrinsics(int width = 640, int height = 480);

/// Board of 400 x 300 mm with specular DoLP and randomly sampled poses.
SceneSpec default_scene(std::size_t views, std::uint64_t seed);

}  // namespace ppa
