#pragma once

#include <cmath>
#include <optional>

#include "ppa/camera.hpp"

namespace ppa {

/// Plane n . P + offset = 0 (millimetres).
struct PlaneModel {
  Unit3d normal;
  double offset = 0.0;

  static PlaneModel through(const Eigen::Vector3d& point, const Unit3d& normal) {
    return {normal, -normal.dot(point)};
  }

  double signed_distance(const Eigen::Vector3d& p) const { return normal.dot(p) + offset; }

  /// The same plane expressed in the camera frame of `pose`.
  PlaneModel in_camera(const Posed& pose) const {
    const Eigen::Vector3d point_world = -offset * normal.vec();
    return through(pose.to_camera(point_world), transform_normal(pose, normal));
  }

  /// Parameter t >= 0 with origin + t * dir on the plane, if any.
  std::optional<double> intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                  double parallel_tolerance = 1e-12) const {
    const double denom = normal.dot(dir);
    if (std::abs(denom) < parallel_tolerance * dir.norm()) return std::nullopt;
    const double t = -signed_distance(origin) / denom;
    if (!(t > 0.0)) return std::nullopt;
    return t;
  }
};

/// Rectangular planar target. `axis_u` is an in-plane unit direction along
/// the width; the height runs along normal x axis_u.
struct Board {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Unit3d normal = Unit3d::normalize(0, 0, 1);
  Unit3d axis_u = Unit3d::normalize(1, 0, 0);
  double width_mm = 400.0;
  double height_mm = 300.0;

  Eigen::Vector3d axis_v() const { return normal.vec().cross(axis_u.vec()); }
  PlaneModel plane() const { return PlaneModel::through(center, normal); }

  /// Point at board coordinates (s, t) in millimetres from the centre.
  Eigen::Vector3d point(double s, double t) const { return center + s * axis_u.vec() + t * axis_v(); }

  bool contains(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d d = p - center;
    return std::abs(d.dot(axis_u.vec())) <= width_mm / 2 && std::abs(d.dot(axis_v())) <= height_mm / 2;
  }
};

}  // namespace ppa
