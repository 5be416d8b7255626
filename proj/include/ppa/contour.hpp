#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ppa/camera.hpp"
#include "ppa/geometry.hpp"
#include "ppa/image.hpp"

namespace ppa {

/// Ordered 3D contour with the image track it was generated from. Points are
/// in the frame of the camera that owns the track. `seed_index` locates the
/// seed inside the track, which runs in both directions from it.
struct Contour3D {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector2d> pixel_track;
  Eigen::Vector3d seed = Eigen::Vector3d::Zero();
  std::size_t seed_index = 0;

  std::size_t size() const { return points.size(); }
};

/// Iso-depth contour under the OPA model: steps of `step` pixels along the
/// direction perpendicular to [cos phi, -sin phi], tracing both ways from
/// the seed, at constant camera-frame depth. Each direction stops at the
/// mask or image boundary or after `max_steps` steps.
Contour3D trace_iso_depth(const ScalarMap<double>& aolp, const Eigen::Vector2d& seed_pixel, double seed_depth,
                          const Intrinsicsd& intrinsics, double step = 0.5, int max_steps = 100000);

/// Normal used to propagate from track index i to its neighbour.
using NormalSource = std::function<Unit3d(std::size_t track_index)>;

/// Perspective contour along a fixed image track: each next point is the
/// intersection of its pixel ray with the plane through the previous point
/// whose normal `normals` supplies. `seed_point` sits at `seed_index`.
Contour3D trace_ppa(const std::vector<Eigen::Vector2d>& pixel_track, std::size_t seed_index,
                    const Eigen::Vector3d& seed_point, const NormalSource& normals, const Intrinsicsd& intrinsics);

/// Root-mean-square point-to-plane distance.
double plane_rmse(const Contour3D& contour, const PlaneModel& plane);

}  // namespace ppa
