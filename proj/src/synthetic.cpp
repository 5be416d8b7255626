#include "ppa/synthetic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "ppa/angles.hpp"
#include "ppa/errors.hpp"
#include "ppa/parallel.hpp"
#include "ppa/phase_models.hpp"

namespace ppa {

void SceneSpec::validate() const {
  intrinsics.validate();
  for (const auto& p : poses) {
    p.validate();
    if (board.normal.dot(p.center - board.center) <= 0.0)
      throw std::invalid_argument("SceneSpec: a camera sees the back of the board");
  }
  if (dolp_mode == DolpMode::Constant && !(dolp_constant >= 0.0 && dolp_constant <= 1.0))
    throw std::invalid_argument("SceneSpec: constant DoLP must lie in [0, 1]");
  if (dolp_mode == DolpMode::SpecularFresnel && !(refractive_index > 1.0))
    throw std::invalid_argument("SceneSpec: refractive index must exceed 1");
  if (!(intensity_avg > 0.0) || ambient_floor < 0.0 || background < 0.0)
    throw std::invalid_argument("SceneSpec: intensities must be non-negative");
  if (noise.intensity_sigma < 0.0 || noise.aolp_sigma < 0.0)
    throw std::invalid_argument("SceneSpec: noise levels must be non-negative");
}

double specular_dolp(double zenith, double eta) {
  const double s2 = std::sin(zenith) * std::sin(zenith);
  const double c = std::cos(zenith);
  const double e2 = eta * eta;
  const double num = 2.0 * s2 * c * std::sqrt(e2 - s2);
  const double den = e2 - s2 - e2 * s2 + 2.0 * s2 * s2;
  return std::clamp(num / den, 0.0, 1.0);
}

namespace {

std::mt19937_64 row_stream(std::uint64_t seed, std::size_t view, Eigen::Index row) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(view), static_cast<std::uint32_t>(row)};
  return std::mt19937_64(seq);
}

}  // namespace

RenderedView render_view(const SceneSpec& spec, std::size_t pose_index) {
  if (pose_index >= spec.poses.size()) throw std::out_of_range("render_view: pose index out of range");
  spec.validate();
  const Intrinsicsd& k = spec.intrinsics;
  const Posed& pose = spec.poses[pose_index];
  const PlaneModel plane = spec.board.plane();
  const Eigen::Index rows = k.height, cols = k.width;

  RenderedView out;
  out.pose = pose;
  out.normal_world = spec.board.normal;
  out.normal_camera = transform_normal(pose, spec.board.normal);
  out.frame.intrinsics = k;
  for (Image<double>* im : {&out.frame.i0, &out.frame.i45, &out.frame.i90, &out.frame.i135})
    *im = Image<double>::Constant(rows, cols, spec.background);
  out.gt_aolp = ScalarMap<double>(rows, cols);
  out.gt_dolp = ScalarMap<double>(rows, cols);
  out.gt_depth = ScalarMap<double>(rows, cols);

  const Eigen::Matrix3d to_world = pose.rotation.transpose();
  const double base = spec.intensity_avg;
  const double total = base + spec.ambient_floor;
  const bool noisy = spec.noise.aolp_sigma != 0.0 || spec.noise.intensity_sigma != 0.0;

  parallel_for(static_cast<std::size_t>(rows), [&](std::size_t r) {
    const auto ri = static_cast<Eigen::Index>(r);
    auto gen = row_stream(spec.seed, pose_index, ri);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Unit3d v = pixel_to_ray(k, Eigen::Vector2d(double(c), double(ri)));
      // Draw every noise sample for every pixel so the stream does not
      // depend on which pixels hit the board; noiseless scenes skip the draws.
      double aolp_noise = 0.0, intensity_noise[4] = {0.0, 0.0, 0.0, 0.0};
      if (noisy) {
        aolp_noise = gauss(gen) * spec.noise.aolp_sigma;
        for (double& n : intensity_noise) n = gauss(gen) * spec.noise.intensity_sigma * total;
      }

      double pol[4] = {spec.background, spec.background, spec.background, spec.background};
      const auto t = plane.intersect(pose.center, to_world * v.vec());
      const bool on_board = t && spec.board.contains(pose.center + *t * (to_world * v.vec()));
      if (on_board) {
        double phi = 0.0;
        bool defined = true;
        try {
          phi = canonical_phase(ppa_phase(out.normal_camera, v) + spec.aolp_shift);
        } catch (const DegenerateRayNormal&) {
          defined = false;
        }
        const double rho = spec.dolp_mode == DolpMode::Constant
                               ? spec.dolp_constant
                               : specular_dolp(viewing_angle(out.normal_camera, v), spec.refractive_index);
        const double measured_phi = defined ? phi + aolp_noise : 0.0;
        const auto i = synthesize_intensities(base, defined ? rho : 0.0, measured_phi);
        for (int j = 0; j < 4; ++j) pol[j] = i[j] + spec.ambient_floor;
        if (defined) {
          out.gt_aolp.values(ri, c) = phi;
          out.gt_dolp.values(ri, c) = rho * base / total;
          out.gt_depth.values(ri, c) = *t * v.z();
          out.gt_aolp.mask(ri, c) = out.gt_dolp.mask(ri, c) = out.gt_depth.mask(ri, c) = true;
        }
      }
      Image<double>* ims[4] = {&out.frame.i0, &out.frame.i45, &out.frame.i90, &out.frame.i135};
      for (int j = 0; j < 4; ++j) (*ims[j])(ri, c) = std::max(0.0, pol[j] + intensity_noise[j]);
    }
  });

  if (out.gt_depth.valid_count() == 0) throw PlaneBehindCamera("render_view: no pixel sees the board");
  return out;
}

Posed look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target, const Eigen::Vector3d& right_hint,
              double roll) {
  const Eigen::Vector3d z = (target - center).normalized();
  Eigen::Vector3d x = right_hint - right_hint.dot(z) * z;
  if (x.norm() < 1e-9) {
    x = Eigen::Vector3d::UnitX() - z.x() * z;
    if (x.norm() < 1e-9) x = Eigen::Vector3d::UnitY() - z.y() * z;
  }
  x.normalize();
  Eigen::Vector3d y = z.cross(x);
  const double c = std::cos(roll), s = std::sin(roll);
  const Eigen::Vector3d xr = c * x + s * y;
  const Eigen::Vector3d yr = -s * x + c * y;
  Posed pose;
  pose.rotation.row(0) = xr.transpose();
  pose.rotation.row(1) = yr.transpose();
  pose.rotation.row(2) = z.transpose();
  pose.center = center;
  return pose;
}

double board_visibility(const Board& board, const Intrinsicsd& k, const Posed& pose, int grid) {
  int seen = 0;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const double s = (double(i) / (grid - 1) - 0.5) * board.width_mm;
      const double t = (double(j) / (grid - 1) - 0.5) * board.height_mm;
      const Eigen::Vector3d pc = pose.to_camera(board.point(s, t));
      if (pc.z() <= 0.0) continue;
      if (k.contains(project(k, pc))) ++seen;
    }
  return double(seen) / double(grid * grid);
}

std::vector<Posed> sample_poses(const Board& board, const Intrinsicsd& k, std::size_t count,
                                const PoseSampling& ranges, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_poses: count must be at least 1");
  if (!(ranges.min_distance_mm > 0.0) || ranges.max_distance_mm < ranges.min_distance_mm)
    throw InfeasiblePoses("sample_poses: distance range is empty or non-positive");
  if (!(ranges.max_tilt >= 0.0 && ranges.max_tilt < kPi<double> / 2))
    throw InfeasiblePoses("sample_poses: tilt range must lie in [0, pi/2)");

  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double tilt = ranges.max_tilt;
  const Eigen::Vector3d n = board.normal.vec(), u = board.axis_u.vec(), v = board.axis_v();
  std::vector<Posed> poses;
  poses.reserve(count);
  constexpr int kMaxAttempts = 1000;
  for (std::size_t i = 0; i < count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      // uniform on the spherical cap of half-angle `tilt`
      const double cos_a = 1.0 - unit(gen) * (1.0 - std::cos(tilt));
      const double sin_a = std::sqrt(std::max(0.0, 1.0 - cos_a * cos_a));
      const double azimuth = 2.0 * kPi<double> * unit(gen);
      const double dist = ranges.min_distance_mm + unit(gen) * (ranges.max_distance_mm - ranges.min_distance_mm);
      const double ts = unit(gen) - 0.5, tt = unit(gen) - 0.5, roll_draw = unit(gen) - 0.5;
      const Eigen::Vector3d dir = cos_a * n + sin_a * (std::cos(azimuth) * u + std::sin(azimuth) * v);
      const Eigen::Vector3d center = board.center + dist * dir;
      // aim at a point in the inner half of the board; a zero tilt range
      // gives fronto-parallel views of the centre
      const double spread = tilt > 0.0 ? 0.5 : 0.0;
      const Eigen::Vector3d target = board.point(ts * spread * board.width_mm, tt * spread * board.height_mm);
      const double roll = tilt > 0.0 ? 2.0 * kPi<double> * roll_draw : 0.0;
      Posed pose = look_at(center, target, u, roll);
      if (board_visibility(board, k, pose) >= ranges.min_visibility) {
        poses.push_back(pose);
        placed = true;
      }
    }
    if (!placed) throw InfeasiblePoses("sample_poses: no pose in range sees enough of the board");
  }
  return poses;
}

Intrinsicsd default_intrinsics(int width, int height) {
  return Intrinsicsd::from_fov(width, height, deg2rad(86.6));
}

SceneSpec default_scene(std::size_t views, std::uint64_t seed) {
  SceneSpec spec;
  spec.intrinsics = default_intrinsics();
  spec.dolp_mode = DolpMode::SpecularFresnel;
  spec.refractive_index = 1.5;
  spec.aolp_shift = kPi<double> / 2;
  spec.ambient_floor = 0.02;
  spec.seed = seed;
  spec.poses = sample_poses(spec.board, spec.intrinsics, views, PoseSampling{}, seed);
  return spec;
}

}  // namespace ppa
