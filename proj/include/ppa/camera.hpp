#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ppa {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

/// A direction of unit Euclidean length (surface normal, viewing ray, axis).
template <typename Scalar>
class UnitVector3 {
 public:
  using Vector = Vector3<Scalar>;

  UnitVector3() : v_(Scalar(0), Scalar(0), Scalar(1)) {}

  /// Normalizes an arbitrary non-zero vector.
  static UnitVector3 normalize(const Vector& v) {
    const Scalar n = v.norm();
    if (!(n > Scalar(0)) || !std::isfinite(n))
      throw std::invalid_argument("UnitVector3: cannot normalize a zero or non-finite vector");
    return UnitVector3(v / n);
  }
  static UnitVector3 normalize(Scalar x, Scalar y, Scalar z) { return normalize(Vector(x, y, z)); }

  /// Accepts a vector that is already unit length up to rounding of the
  /// caller's literals (1e-6) and renormalizes it exactly.
  static UnitVector3 from_unit(const Vector& v) {
    if (std::abs(v.norm() - Scalar(1)) > Scalar(1e-6))
      throw std::invalid_argument("UnitVector3: vector is not unit length");
    return normalize(v);
  }

  const Vector& vec() const { return v_; }
  operator const Vector&() const { return v_; }

  Scalar x() const { return v_.x(); }
  Scalar y() const { return v_.y(); }
  Scalar z() const { return v_.z(); }
  Scalar operator[](int i) const { return v_[i]; }

  Scalar dot(const Vector& other) const { return v_.dot(other); }
  UnitVector3 operator-() const { return UnitVector3(-v_); }

 private:
  explicit UnitVector3(const Vector& v) : v_(v) {}
  Vector v_;
};

/// Pinhole intrinsics of an undistorted image. Pixel coordinates are
/// continuous with the origin at the centre of the top-left pixel.
template <typename Scalar>
struct CameraIntrinsics {
  Scalar fx{1}, fy{1};
  Scalar cx{0}, cy{0};
  int width{0}, height{0};

  void validate() const {
    if (!(fx > 0) || !(fy > 0)) throw std::invalid_argument("CameraIntrinsics: focal lengths must be positive");
    if (!(cx > 0 && cx < width) || !(cy > 0 && cy < height))
      throw std::invalid_argument("CameraIntrinsics: principal point must lie inside the image");
  }

  Matrix3<Scalar> matrix() const {
    Matrix3<Scalar> k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }

  bool contains(const Vector2<Scalar>& px) const {
    return px.x() >= Scalar(-0.5) && px.x() <= Scalar(width) - Scalar(0.5) && px.y() >= Scalar(-0.5) &&
           px.y() <= Scalar(height) - Scalar(0.5);
  }

  /// Intrinsics for an image whose size is scaled by `factor` (e.g. 0.5 for
  /// a 2x2 superpixel grid), keeping pixel-centre conventions consistent.
  CameraIntrinsics scaled(Scalar factor) const {
    CameraIntrinsics out;
    out.fx = fx * factor;
    out.fy = fy * factor;
    out.cx = (cx + Scalar(0.5)) * factor - Scalar(0.5);
    out.cy = (cy + Scalar(0.5)) * factor - Scalar(0.5);
    out.width = static_cast<int>(std::lround(width * factor));
    out.height = static_cast<int>(std::lround(height * factor));
    return out;
  }

  /// Intrinsics of a pinhole with horizontal field of view `fov_x` (radians)
  /// and square pixels, principal point at the image centre.
  static CameraIntrinsics from_fov(int width, int height, Scalar fov_x) {
    CameraIntrinsics k;
    k.width = width;
    k.height = height;
    k.fx = k.fy = Scalar(width) / Scalar(2) / std::tan(fov_x / Scalar(2));
    k.cx = Scalar(width - 1) / Scalar(2);
    k.cy = Scalar(height - 1) / Scalar(2);
    return k;
  }
};

/// World-to-camera rotation plus camera centre (world frame, millimetres).
/// A world point P maps to camera coordinates rotation * (P - center), and a
/// world-frame normal maps to rotation * n.
template <typename Scalar>
struct Pose {
  Matrix3<Scalar> rotation = Matrix3<Scalar>::Identity();
  Vector3<Scalar> center = Vector3<Scalar>::Zero();

  void validate() const {
    const Scalar ortho = (rotation.transpose() * rotation - Matrix3<Scalar>::Identity()).norm();
    if (ortho > Scalar(1e-10)) throw std::invalid_argument("Pose: rotation is not orthonormal");
    if (std::abs(rotation.determinant() - Scalar(1)) > Scalar(1e-10))
      throw std::invalid_argument("Pose: rotation determinant is not +1");
  }

  Vector3<Scalar> to_camera(const Vector3<Scalar>& p_world) const { return rotation * (p_world - center); }
  Vector3<Scalar> to_world(const Vector3<Scalar>& p_cam) const { return rotation.transpose() * p_cam + center; }
  /// Optical axis expressed in the world frame.
  Vector3<Scalar> axis_world() const { return rotation.row(2).transpose(); }
};

/// Unit viewing ray through a pixel: normalize(K^-1 [u, v, 1]).
template <typename Scalar>
UnitVector3<Scalar> pixel_to_ray(const CameraIntrinsics<Scalar>& k, const Vector2<Scalar>& pixel) {
  if (!k.contains(pixel)) throw std::invalid_argument("pixel_to_ray: pixel outside image bounds");
  return UnitVector3<Scalar>::normalize((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, Scalar(1));
}

/// Same as pixel_to_ray without the bounds check, for points that are
/// known to come from a projection.
template <typename Scalar>
UnitVector3<Scalar> ray_through(const CameraIntrinsics<Scalar>& k, const Vector2<Scalar>& pixel) {
  return UnitVector3<Scalar>::normalize((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, Scalar(1));
}

template <typename Scalar>
Vector2<Scalar> project(const CameraIntrinsics<Scalar>& k, const Vector3<Scalar>& p_cam) {
  return {k.fx * p_cam.x() / p_cam.z() + k.cx, k.fy * p_cam.y() / p_cam.z() + k.cy};
}

/// Camera-frame point at z-depth `depth` along the ray through `pixel`.
template <typename Scalar>
Vector3<Scalar> back_project(const CameraIntrinsics<Scalar>& k, const Vector2<Scalar>& pixel, Scalar depth) {
  return {depth * (pixel.x() - k.cx) / k.fx, depth * (pixel.y() - k.cy) / k.fy, depth};
}

template <typename Scalar>
Matrix3<Scalar> skew(const Vector3<Scalar>& r) {
  Matrix3<Scalar> s;
  s << 0, -r.z(), r.y(), r.z(), 0, -r.x(), -r.y(), r.x(), 0;
  return s;
}

/// Rodrigues formula for exp(angle * axis^).
template <typename Scalar>
Matrix3<Scalar> rotation_exp(const UnitVector3<Scalar>& axis, Scalar angle) {
  const Matrix3<Scalar> a = skew<Scalar>(axis.vec());
  return Matrix3<Scalar>::Identity() + std::sin(angle) * a + (Scalar(1) - std::cos(angle)) * a * a;
}

template <typename Scalar>
UnitVector3<Scalar> transform_normal(const Pose<Scalar>& pose, const UnitVector3<Scalar>& normal_world) {
  return UnitVector3<Scalar>::normalize(pose.rotation * normal_world.vec());
}

/// Angle between two directions, robust near 0 and pi.
template <typename Scalar>
Scalar angle_between(const Vector3<Scalar>& a, const Vector3<Scalar>& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

using Intrinsicsd = CameraIntrinsics<double>;
using Posed = Pose<double>;
using Unit3d = UnitVector3<double>;

}  // namespace ppa
