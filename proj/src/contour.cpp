#include "ppa/contour.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ppa/errors.hpp"

namespace ppa {

namespace {

bool inside(const ScalarMap<double>& map, const Eigen::Vector2d& p) {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= double(map.cols() - 1) && p.y() <= double(map.rows() - 1);
}

Eigen::Vector2d tangent(double phi) { return {std::sin(phi), std::cos(phi)}; }

std::vector<Eigen::Vector2d> march(const ScalarMap<double>& aolp, const Eigen::Vector2d& seed, double step,
                                   int max_steps, const Eigen::Vector2d& initial) {
  std::vector<Eigen::Vector2d> track;
  Eigen::Vector2d p = seed;
  Eigen::Vector2d prev = initial;
  for (int i = 0; i < max_steps; ++i) {
    const auto phi = sample_phase_bilinear(aolp, p);
    if (!phi) break;
    Eigen::Vector2d t = tangent(*phi);
    if (t.dot(prev) < 0.0) t = -t;
    const Eigen::Vector2d next = p + step * t;
    if (!inside(aolp, next) || !sample_phase_bilinear(aolp, next)) break;
    track.push_back(next);
    prev = t;
    p = next;
  }
  return track;
}

}  // namespace

Contour3D trace_iso_depth(const ScalarMap<double>& aolp, const Eigen::Vector2d& seed_pixel, double seed_depth,
                          const Intrinsicsd& intrinsics, double step, int max_steps) {
  if (!(step > 0.0)) throw std::invalid_argument("trace_iso_depth: step must be positive");
  if (max_steps < 0) throw std::invalid_argument("trace_iso_depth: max_steps must be non-negative");
  if (!(seed_depth > 0.0)) throw std::invalid_argument("trace_iso_depth: seed depth must be positive");
  if (!inside(aolp, seed_pixel)) throw SeedOutOfBounds("trace_iso_depth: seed outside the phase map");
  const auto phi0 = sample_phase_bilinear(aolp, seed_pixel);
  if (!phi0) throw SeedMasked("trace_iso_depth: seed pixel is masked");

  const Eigen::Vector2d t0 = tangent(*phi0);
  const auto forward = march(aolp, seed_pixel, step, max_steps, t0);
  const auto backward = march(aolp, seed_pixel, step, max_steps, -t0);

  Contour3D out;
  out.pixel_track.reserve(forward.size() + backward.size() + 1);
  out.pixel_track.assign(backward.rbegin(), backward.rend());
  out.seed_index = out.pixel_track.size();
  out.pixel_track.push_back(seed_pixel);
  out.pixel_track.insert(out.pixel_track.end(), forward.begin(), forward.end());
  out.points.reserve(out.pixel_track.size());
  for (const auto& px : out.pixel_track) out.points.push_back(back_project(intrinsics, px, seed_depth));
  out.seed = out.points[out.seed_index];
  return out;
}

Contour3D trace_ppa(const std::vector<Eigen::Vector2d>& pixel_track, std::size_t seed_index,
                    const Eigen::Vector3d& seed_point, const NormalSource& normals, const Intrinsicsd& intrinsics) {
  if (seed_index >= pixel_track.size()) throw std::invalid_argument("trace_ppa: seed index outside the track");
  Contour3D out;
  out.pixel_track = pixel_track;
  out.seed_index = seed_index;
  out.seed = seed_point;
  out.points.assign(pixel_track.size(), seed_point);

  auto propagate = [&](std::size_t from, std::size_t to) {
    const Unit3d n = normals(from);
    // ray parameterized by camera-frame depth
    const Eigen::Vector3d ray = back_project(intrinsics, pixel_track[to], 1.0);
    const double denom = n.dot(ray);
    if (std::abs(denom) < 1e-9 * ray.norm()) throw RayParallelToPlane("trace_ppa: ray is parallel to the plane");
    out.points[to] = (n.dot(out.points[from]) / denom) * ray;
  };
  for (std::size_t i = seed_index + 1; i < pixel_track.size(); ++i) propagate(i - 1, i);
  for (std::size_t i = seed_index; i-- > 0;) propagate(i + 1, i);
  return out;
}

double plane_rmse(const Contour3D& contour, const PlaneModel& plane) {
  if (contour.points.empty()) throw EmptyContour("plane_rmse: contour has no points");
  double sum = 0.0;
  for (const auto& p : contour.points) {
    const double d = plane.signed_distance(p);
    sum += d * d;
  }
  return std::sqrt(sum / double(contour.points.size()));
}

}  // namespace ppa
