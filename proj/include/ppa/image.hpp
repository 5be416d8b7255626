#pragma once

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "ppa/angles.hpp"
#include "ppa/camera.hpp"

namespace ppa {

/// Row-major dense image; element (row, col) is pixel (v, u).
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-pixel field with a validity mask (AoLP, DoLP, average intensity, depth).
template <typename Scalar>
struct ScalarMap {
  Image<Scalar> values;
  Mask mask;

  ScalarMap() = default;
  ScalarMap(Eigen::Index rows, Eigen::Index cols)
      : values(Image<Scalar>::Zero(rows, cols)), mask(Mask::Constant(rows, cols, false)) {}

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  Eigen::Index valid_count() const { return mask.count(); }
  bool valid(Eigen::Index row, Eigen::Index col) const {
    return row >= 0 && col >= 0 && row < rows() && col < cols() && mask(row, col);
  }
};

namespace detail {

struct BilinearStencil {
  Eigen::Index r0, c0;
  double wr, wc;
};

template <typename Scalar>
std::optional<BilinearStencil> stencil(const Mask& mask, const Vector2<Scalar>& px) {
  const double u = static_cast<double>(px.x());
  const double v = static_cast<double>(px.y());
  if (!(u >= 0.0) || !(v >= 0.0) || u > static_cast<double>(mask.cols() - 1) ||
      v > static_cast<double>(mask.rows() - 1))
    return std::nullopt;
  Eigen::Index c0 = static_cast<Eigen::Index>(std::floor(u));
  Eigen::Index r0 = static_cast<Eigen::Index>(std::floor(v));
  // keep the 2x2 stencil inside the image on the last row/column
  if (c0 == mask.cols() - 1 && c0 > 0) --c0;
  if (r0 == mask.rows() - 1 && r0 > 0) --r0;
  const Eigen::Index c1 = std::min<Eigen::Index>(c0 + 1, mask.cols() - 1);
  const Eigen::Index r1 = std::min<Eigen::Index>(r0 + 1, mask.rows() - 1);
  if (!mask(r0, c0) || !mask(r0, c1) || !mask(r1, c0) || !mask(r1, c1)) return std::nullopt;
  return BilinearStencil{r0, c0, v - static_cast<double>(r0), u - static_cast<double>(c0)};
}

}  // namespace detail

/// Bilinear sample; empty when any pixel of the 2x2 support is masked or the
/// point lies outside [0, cols-1] x [0, rows-1].
template <typename Scalar>
std::optional<Scalar> sample_bilinear(const ScalarMap<Scalar>& map, const Vector2<Scalar>& px) {
  const auto s = detail::stencil(map.mask, px);
  if (!s) return std::nullopt;
  const Eigen::Index c1 = std::min<Eigen::Index>(s->c0 + 1, map.cols() - 1);
  const Eigen::Index r1 = std::min<Eigen::Index>(s->r0 + 1, map.rows() - 1);
  const auto& f = map.values;
  const double top = (1 - s->wc) * f(s->r0, s->c0) + s->wc * f(s->r0, c1);
  const double bottom = (1 - s->wc) * f(r1, s->c0) + s->wc * f(r1, c1);
  return static_cast<Scalar>((1 - s->wr) * top + s->wr * bottom);
}

/// Bilinear sample of a mod-pi phase map: interpolates (cos 2phi, sin 2phi)
/// and halves the resulting angle, so samples straddling the 0/pi seam do
/// not average to pi/2.
template <typename Scalar>
std::optional<Scalar> sample_phase_bilinear(const ScalarMap<Scalar>& map, const Vector2<Scalar>& px) {
  const auto s = detail::stencil(map.mask, px);
  if (!s) return std::nullopt;
  const Eigen::Index c1 = std::min<Eigen::Index>(s->c0 + 1, map.cols() - 1);
  const Eigen::Index r1 = std::min<Eigen::Index>(s->r0 + 1, map.rows() - 1);
  double c = 0.0, sn = 0.0;
  auto add = [&](Eigen::Index r, Eigen::Index col, double w) {
    const double a = 2.0 * static_cast<double>(map.values(r, col));
    c += w * std::cos(a);
    sn += w * std::sin(a);
  };
  add(s->r0, s->c0, (1 - s->wr) * (1 - s->wc));
  add(s->r0, c1, (1 - s->wr) * s->wc);
  add(r1, s->c0, s->wr * (1 - s->wc));
  add(r1, c1, s->wr * s->wc);
  if (std::hypot(c, sn) < 1e-12) return std::nullopt;
  return static_cast<Scalar>(canonical_phase(0.5 * std::atan2(sn, c)));
}

/// Square erosion: a pixel stays valid only if every pixel within
/// `radius` (Chebyshev distance) is valid. Pixels near the border see
/// outside the image as invalid.
inline Mask erode(const Mask& mask, int radius) {
  if (radius < 0) throw std::invalid_argument("erode: radius must be non-negative");
  if (radius == 0) return mask;
  auto pass = [radius](const Mask& in, bool along_rows) {
    Mask out = Mask::Constant(in.rows(), in.cols(), false);
    for (Eigen::Index r = 0; r < in.rows(); ++r)
      for (Eigen::Index c = 0; c < in.cols(); ++c) {
        bool all = true;
        for (int d = -radius; d <= radius && all; ++d) {
          const Eigen::Index rr = along_rows ? r : r + d, cc = along_rows ? c + d : c;
          all = rr >= 0 && cc >= 0 && rr < in.rows() && cc < in.cols() && in(rr, cc);
        }
        out(r, c) = all;
      }
    return out;
  };
  return pass(pass(mask, true), false);
}

}  // namespace ppa
