#pragma once

#include <cmath>
#include <set>

#include "ppa/angles.hpp"
#include "ppa/camera.hpp"
#include "ppa/errors.hpp"

namespace ppa {

/// Orthographic (OPA) or perspective (PPA) phase angle model.
enum class ModelKind { OPA, PPA };

inline const char* to_string(ModelKind m) { return m == ModelKind::OPA ? "opa" : "ppa"; }

/// One linear constraint m . n = 0 on a surface normal.
template <typename Scalar>
struct ConstraintRow {
  Vector3<Scalar> m = Vector3<Scalar>::Zero();
  ModelKind model = ModelKind::PPA;
  int view_index = 0;
  Vector2<Scalar> pixel = Vector2<Scalar>::Zero();
};

inline constexpr double kDegeneracyTolerance = 1e-12;
inline constexpr double kEquivalenceTolerance = 1e-9;

namespace detail {
template <typename Scalar>
Scalar wrap_two_pi(Scalar a) {
  Scalar r = std::fmod(a, Scalar(2) * kPi<Scalar>);
  if (r < 0) r += Scalar(2) * kPi<Scalar>;
  if (r >= Scalar(2) * kPi<Scalar>) r = 0;
  return r;
}
}  // namespace detail

/// Image-plane azimuth of the normal, -atan2(n_y, n_x), wrapped to [0, 2pi).
template <typename Scalar>
Scalar opa_oriented_phase(const UnitVector3<Scalar>& n) {
  if (std::hypot(n.x(), n.y()) < Scalar(kDegeneracyTolerance))
    throw DegenerateNormal("opa_phase: normal is parallel to the optical axis");
  return detail::wrap_two_pi(-std::atan2(n.y(), n.x()));
}

/// OPA phase angle in [0, pi).
template <typename Scalar>
Scalar opa_phase(const UnitVector3<Scalar>& n) {
  return canonical_phase(opa_oriented_phase(n));
}

/// Direction of z x (n x v) in the image plane as an angle in [0, 2pi):
/// the side of the plane of incidence towards which the normal tilts away
/// from the viewing ray. Reduces modulo pi to ppa_phase().
template <typename Scalar>
Scalar ppa_oriented_phase(const UnitVector3<Scalar>& n, const UnitVector3<Scalar>& v) {
  if (v.vec().cross(n.vec()).norm() < Scalar(kDegeneracyTolerance))
    throw DegenerateRayNormal("ppa_phase: viewing ray is parallel to the normal");
  const Scalar a = v.z() * n.x() - v.x() * n.z();
  const Scalar b = v.z() * n.y() - v.y() * n.z();
  if (std::hypot(a, b) < Scalar(kDegeneracyTolerance))
    throw DegenerateRayNormal("ppa_phase: plane of incidence is parallel to the image plane");
  return detail::wrap_two_pi(-std::atan2(b, a));
}

/// PPA phase angle in [0, pi): direction of the line where the plane of
/// incidence spanned by v and n cuts the image plane.
template <typename Scalar>
Scalar ppa_phase(const UnitVector3<Scalar>& n, const UnitVector3<Scalar>& v) {
  return canonical_phase(ppa_oriented_phase(n, v));
}

template <typename Scalar>
Scalar predicted_phase(ModelKind model, const UnitVector3<Scalar>& n, const UnitVector3<Scalar>& v) {
  return model == ModelKind::OPA ? opa_phase(n) : ppa_phase(n, v);
}

template <typename Scalar>
ConstraintRow<Scalar> opa_constraint_row(Scalar phi) {
  ConstraintRow<Scalar> row;
  row.m = Vector3<Scalar>(std::sin(phi), std::cos(phi), Scalar(0));
  row.model = ModelKind::OPA;
  return row;
}

template <typename Scalar>
ConstraintRow<Scalar> ppa_constraint_row(Scalar phi, const UnitVector3<Scalar>& v) {
  if (!(v.z() > Scalar(0))) throw RayBehindCamera("ppa_constraint_row: viewing ray has v_z <= 0");
  const Scalar s = std::sin(phi), c = std::cos(phi);
  ConstraintRow<Scalar> row;
  row.m = Vector3<Scalar>(s, c, -(v.y() * c + v.x() * s) / v.z());
  row.model = ModelKind::PPA;
  return row;
}

template <typename Scalar>
ConstraintRow<Scalar> constraint_row(ModelKind model, Scalar phi, const UnitVector3<Scalar>& v) {
  return model == ModelKind::OPA ? opa_constraint_row(phi) : ppa_constraint_row(phi, v);
}

/// Rotation axis used to parameterize a normal by (phase, viewing angle):
/// d x v / |d x v| with d = [cos phi, -sin phi, 0]. The OPA model uses the
/// optical axis in place of v.
template <typename Scalar>
UnitVector3<Scalar> normal_rotation_axis(ModelKind model, Scalar phi, const UnitVector3<Scalar>& v) {
  const Vector3<Scalar> d(std::cos(phi), -std::sin(phi), Scalar(0));
  const Vector3<Scalar> ray = model == ModelKind::OPA ? Vector3<Scalar>::UnitZ() : v.vec();
  const Vector3<Scalar> axis = d.cross(ray);
  if (axis.norm() < Scalar(kDegeneracyTolerance))
    throw DegenerateAxis("normal_from_angles: phase direction is parallel to the viewing ray");
  return UnitVector3<Scalar>::normalize(axis);
}

/// Normal obtained by rotating -v by `theta` (the viewing angle) about the
/// model's axis. `phi` is the oriented phase in [0, 2pi) as returned by
/// ppa_oriented_phase / opa_oriented_phase; a phase known only modulo pi
/// yields either the normal or its mirror image in the plane of incidence.
template <typename Scalar>
UnitVector3<Scalar> normal_from_angles(ModelKind model, Scalar phi, Scalar theta, const UnitVector3<Scalar>& v) {
  const auto axis = normal_rotation_axis(model, phi, v);
  return UnitVector3<Scalar>::normalize(-(rotation_exp(axis, theta) * v.vec()));
}

/// Angle between -v and n.
template <typename Scalar>
Scalar viewing_angle(const UnitVector3<Scalar>& n, const UnitVector3<Scalar>& v) {
  return angle_between<Scalar>(-v.vec(), n.vec());
}

/// Which of the four OPA/PPA equivalence conditions hold for (n, v):
///   1  v is the optical axis
///   2  [v_x, v_y] || [cos phi_p, -sin phi_p] || [n_x, n_y]
///   3  n tends to the optical axis (|n_z| > 1 - tol)
///   4  n is perpendicular to the optical axis
/// Normals are compared up to sign, matching the pi-periodicity of phases.
template <typename Scalar>
std::set<int> classify_equivalence(const UnitVector3<Scalar>& n, const UnitVector3<Scalar>& v) {
  const Scalar tol = Scalar(kEquivalenceTolerance);
  std::set<int> cases;
  if ((v.vec() - Vector3<Scalar>::UnitZ()).norm() < tol) cases.insert(1);

  const Vector2<Scalar> vxy(v.x(), v.y()), nxy(n.x(), n.y());
  if (vxy.norm() > tol && nxy.norm() > tol) {
    auto cross2 = [](const Vector2<Scalar>& a, const Vector2<Scalar>& b) { return a.x() * b.y() - a.y() * b.x(); };
    const Vector2<Scalar> vh = vxy.normalized(), nh = nxy.normalized();
    bool parallel = std::abs(cross2(vh, nh)) < tol;
    if (parallel) {
      try {
        const Scalar phi = ppa_phase(n, v);
        parallel = std::abs(cross2(vh, Vector2<Scalar>(std::cos(phi), -std::sin(phi)))) < tol;
      } catch (const DegenerateRayNormal&) {
        parallel = false;
      }
    }
    if (parallel) cases.insert(2);
  }

  if (std::abs(n.z()) > Scalar(1) - tol) cases.insert(3);
  if (std::abs(n.z()) < tol) cases.insert(4);
  return cases;
}

}  // namespace ppa
