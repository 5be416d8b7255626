#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ppa {

template <typename Scalar>
inline constexpr Scalar kPi = std::numbers::pi_v<Scalar>;

template <typename Scalar>
constexpr Scalar deg2rad(Scalar deg) {
  return deg * kPi<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad2deg(Scalar rad) {
  return rad * Scalar(180) / kPi<Scalar>;
}

/// Wraps a phase angle into [0, pi).
template <typename Scalar>
Scalar canonical_phase(Scalar phi) {
  Scalar r = std::fmod(phi, kPi<Scalar>);
  if (r < Scalar(0)) r += kPi<Scalar>;
  // fmod of a tiny negative value can round up to exactly pi
  if (r >= kPi<Scalar>) r = Scalar(0);
  return r;
}

/// Distance between two phase angles modulo pi, in [0, pi/2].
template <typename Scalar>
Scalar phase_distance(Scalar a, Scalar b) {
  const Scalar d = canonical_phase(a - b);
  return std::min(d, kPi<Scalar> - d);
}

/// Signed difference `estimate - reference` modulo pi, mapped to (-pi/2, pi/2].
template <typename Scalar>
Scalar signed_phase_error(Scalar estimate, Scalar reference) {
  const Scalar d = canonical_phase(estimate - reference);
  return d > kPi<Scalar> / Scalar(2) ? d - kPi<Scalar> : d;
}

}  // namespace ppa
