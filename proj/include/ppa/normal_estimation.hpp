#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "ppa/camera.hpp"
#include "ppa/errors.hpp"
#include "ppa/image.hpp"
#include "ppa/parallel.hpp"
#include "ppa/phase_models.hpp"

namespace ppa {

enum class ConstraintFrame { Camera, World };

template <typename Scalar>
struct ConstraintSystem {
  std::vector<ConstraintRow<Scalar>> rows;
  ConstraintFrame frame = ConstraintFrame::Camera;
};

template <typename Scalar>
struct NormalEstimate {
  UnitVector3<Scalar> normal;
  std::array<Scalar, 3> eigenvalues{};  // ascending
  Scalar condition_ratio{0};            // second-smallest / largest eigenvalue
  int inlier_count{0};
};

template <typename Scalar>
struct SolveOptions {
  Scalar condition_threshold = Scalar(1e-6);
  /// Eigenvalues of M^T M closer than this (relative to the largest) count
  /// as a tie for the smallest and the null direction is undetermined.
  Scalar tie_tolerance = Scalar(1e-10);
  /// One pass of residual trimming at 3 x MAD before the final solve.
  bool trim_outliers = false;
};

/// Streaming accumulator of M^T M over unit-normalized constraint rows.
/// Memory is constant in the number of rows; accumulators merge, so a
/// system can be reduced over independent chunks.
template <typename Scalar>
class NormalAccumulator {
 public:
  void add(const Vector3<Scalar>& m, ModelKind model = ModelKind::PPA) {
    const Scalar len = m.norm();
    if (!(len > Scalar(0)) || !std::isfinite(len)) return;
    const Vector3<Scalar> u = m / len;
    normal_matrix_.noalias() += u * u.transpose();
    ++count_;
    if (model != ModelKind::OPA) opa_only_ = false;
  }

  void merge(const NormalAccumulator& other) {
    normal_matrix_ += other.normal_matrix_;
    count_ += other.count_;
    opa_only_ = opa_only_ && other.opa_only_;
  }

  int count() const { return count_; }
  const Matrix3<Scalar>& normal_matrix() const { return normal_matrix_; }

  /// Smallest-eigenvalue eigenvector of M^T M, oriented so that
  /// normal . reference_ray < 0. `camera_frame` marks rows expressed in a
  /// single camera frame; OPA rows there all have a zero third component, so
  /// the optical axis is always an exact null direction and the system can
  /// never single out the normal.
  NormalEstimate<Scalar> solve(const Vector3<Scalar>& reference_ray, const SolveOptions<Scalar>& opts,
                               bool camera_frame = false) const {
    if (count_ < 2) throw EmptySystem("solve_normal: fewer than two constraint rows");
    if (camera_frame && opa_only_)
      throw IllConditioned(
          "solve_normal: OPA rows from a single view leave the optical axis in the null space");
    Eigen::SelfAdjointEigenSolver<Matrix3<Scalar>> eig(normal_matrix_);
    if (eig.info() != Eigen::Success) throw IllConditioned("solve_normal: eigen-decomposition failed");
    NormalEstimate<Scalar> est;
    for (int i = 0; i < 3; ++i) est.eigenvalues[i] = std::max(eig.eigenvalues()[i], Scalar(0));
    const Scalar largest = est.eigenvalues[2];
    est.condition_ratio = largest > Scalar(0) ? est.eigenvalues[1] / largest : Scalar(0);
    if (est.condition_ratio < opts.condition_threshold)
      throw IllConditioned("solve_normal: constraint matrix rank is below two");
    if (est.eigenvalues[1] - est.eigenvalues[0] <= opts.tie_tolerance * largest)
      throw IllConditioned("solve_normal: smallest eigenvalue is not separated");
    Vector3<Scalar> n = eig.eigenvectors().col(0).normalized();
    if (n.dot(reference_ray) > Scalar(0)) n = -n;
    est.normal = UnitVector3<Scalar>::normalize(n);
    est.inlier_count = count_;
    return est;
  }

 private:
  Matrix3<Scalar> normal_matrix_ = Matrix3<Scalar>::Zero();
  int count_ = 0;
  bool opa_only_ = true;
};

namespace detail {
template <typename Scalar>
Scalar median(std::vector<Scalar> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  Scalar m = *mid;
  if (v.size() % 2 == 0) m = (m + *std::max_element(v.begin(), mid)) / Scalar(2);
  return m;
}
}  // namespace detail

template <typename Scalar>
NormalEstimate<Scalar> solve_normal(const ConstraintSystem<Scalar>& system, const UnitVector3<Scalar>& reference_ray,
                                    const SolveOptions<Scalar>& opts = {}) {
  const bool camera_frame = system.frame == ConstraintFrame::Camera;
  NormalAccumulator<Scalar> acc;
  for (const auto& row : system.rows) {
    if (!row.m.allFinite()) throw std::invalid_argument("solve_normal: non-finite constraint row");
    acc.add(row.m, row.model);
  }
  auto est = acc.solve(reference_ray.vec(), opts, camera_frame);
  if (!opts.trim_outliers) return est;

  std::vector<Scalar> residuals;
  residuals.reserve(system.rows.size());
  for (const auto& row : system.rows) residuals.push_back(std::abs(row.m.normalized().dot(est.normal.vec())));
  const Scalar med = detail::median(residuals);
  std::vector<Scalar> dev;
  dev.reserve(residuals.size());
  for (Scalar r : residuals) dev.push_back(std::abs(r - med));
  const Scalar cutoff = med + Scalar(3) * detail::median(dev);
  NormalAccumulator<Scalar> inliers;
  for (std::size_t i = 0; i < residuals.size(); ++i)
    if (residuals[i] <= cutoff) inliers.add(system.rows[i].m, system.rows[i].model);
  return inliers.solve(reference_ray.vec(), opts, camera_frame);
}

/// Reads the phase at `px`: direct lookup on integer coordinates, mod-pi
/// aware bilinear interpolation otherwise.
template <typename Scalar>
std::optional<Scalar> phase_at(const ScalarMap<Scalar>& aolp, const Vector2<Scalar>& px) {
  const Scalar ru = std::round(px.x()), rv = std::round(px.y());
  if (ru == px.x() && rv == px.y()) {
    const auto c = static_cast<Eigen::Index>(ru), r = static_cast<Eigen::Index>(rv);
    if (!aolp.valid(r, c)) return std::nullopt;
    return aolp.values(r, c);
  }
  return sample_phase_bilinear(aolp, px);
}

/// One camera-frame row per unmasked pixel.
template <typename Scalar>
ConstraintSystem<Scalar> build_single_view_system(const ScalarMap<Scalar>& aolp, const std::vector<Vector2<Scalar>>& pixels,
                                                  const CameraIntrinsics<Scalar>& intrinsics, ModelKind model) {
  ConstraintSystem<Scalar> sys;
  sys.frame = ConstraintFrame::Camera;
  sys.rows.reserve(pixels.size());
  for (const auto& px : pixels) {
    const auto phi = phase_at(aolp, px);
    if (!phi) continue;
    auto row = constraint_row(model, *phi, pixel_to_ray(intrinsics, px));
    row.pixel = px;
    sys.rows.push_back(row);
  }
  if (sys.rows.empty()) throw NoValidPixels("build_single_view_system: every requested pixel is masked");
  return sys;
}

/// A phase observation of one surface point in one view.
template <typename Scalar>
struct PhaseObservation {
  Scalar phase{0};
  Vector2<Scalar> pixel = Vector2<Scalar>::Zero();
  CameraIntrinsics<Scalar> intrinsics;
  Pose<Scalar> pose;
};

/// World-frame system with rows m_k^T R_k.
template <typename Scalar>
ConstraintSystem<Scalar> build_multi_view_system(const std::vector<PhaseObservation<Scalar>>& observations,
                                                 ModelKind model) {
  if (observations.size() < 2) throw TooFewViews("build_multi_view_system: need at least two views");
  ConstraintSystem<Scalar> sys;
  sys.frame = ConstraintFrame::World;
  sys.rows.reserve(observations.size());
  for (std::size_t k = 0; k < observations.size(); ++k) {
    const auto& obs = observations[k];
    auto row = constraint_row(model, obs.phase, ray_through(obs.intrinsics, obs.pixel));
    row.m = obs.pose.rotation.transpose() * row.m;
    row.view_index = static_cast<int>(k);
    row.pixel = obs.pixel;
    sys.rows.push_back(row);
  }
  return sys;
}

/// World-frame viewing ray of the first observation, for sign selection.
template <typename Scalar>
UnitVector3<Scalar> reference_ray(const std::vector<PhaseObservation<Scalar>>& observations) {
  const auto& o = observations.front();
  return UnitVector3<Scalar>::normalize(o.pose.rotation.transpose() * ray_through(o.intrinsics, o.pixel).vec());
}

/// Plane normal from every unmasked pixel of `region`, with the region's
/// mean viewing ray as the sign reference. Rows are reduced per image row
/// and merged in row order, so the result does not depend on threading.
template <typename Scalar>
NormalEstimate<Scalar> estimate_plane_normal_map(const ScalarMap<Scalar>& aolp, const Mask& region,
                                                 const CameraIntrinsics<Scalar>& intrinsics,
                                                 ModelKind model = ModelKind::PPA,
                                                 const SolveOptions<Scalar>& opts = {}) {
  if (region.rows() != aolp.rows() || region.cols() != aolp.cols())
    throw std::invalid_argument("estimate_plane_normal_map: region size differs from the phase map");
  const auto rows = static_cast<std::size_t>(aolp.rows());
  std::vector<NormalAccumulator<Scalar>> partial(rows);
  std::vector<Vector3<Scalar>> ray_sum(rows, Vector3<Scalar>::Zero());
  parallel_for(rows, [&](std::size_t r) {
    const auto ri = static_cast<Eigen::Index>(r);
    for (Eigen::Index c = 0; c < aolp.cols(); ++c) {
      if (!region(ri, c) || !aolp.mask(ri, c)) continue;
      const auto v = pixel_to_ray(intrinsics, Vector2<Scalar>(Scalar(c), Scalar(ri)));
      partial[r].add(constraint_row(model, aolp.values(ri, c), v).m, model);
      ray_sum[r] += v.vec();
    }
  });
  NormalAccumulator<Scalar> acc;
  Vector3<Scalar> mean_ray = Vector3<Scalar>::Zero();
  for (std::size_t r = 0; r < rows; ++r) {
    acc.merge(partial[r]);
    mean_ray += ray_sum[r];
  }
  if (acc.count() < 2) throw EmptySystem("estimate_plane_normal_map: fewer than two valid pixels in region");
  if (!opts.trim_outliers) return acc.solve(mean_ray, opts, true);

  ConstraintSystem<Scalar> sys;
  for (Eigen::Index r = 0; r < aolp.rows(); ++r)
    for (Eigen::Index c = 0; c < aolp.cols(); ++c)
      if (region(r, c) && aolp.mask(r, c)) {
        const auto v = pixel_to_ray(intrinsics, Vector2<Scalar>(Scalar(c), Scalar(r)));
        sys.rows.push_back(constraint_row(model, aolp.values(r, c), v));
      }
  return solve_normal(sys, UnitVector3<Scalar>::normalize(mean_ray), opts);
}

}  // namespace ppa
