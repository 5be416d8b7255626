#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppa/angles.hpp"
#include "ppa/camera.hpp"
#include "ppa/image.hpp"

namespace ppa {

/// Four co-registered intensity images behind polarizers at 0, 45, 90 and
/// 135 degrees.
template <typename Scalar>
struct PolarizationFrame {
  Image<Scalar> i0, i45, i90, i135;
  CameraIntrinsics<Scalar> intrinsics;

  void validate() const {
    for (const Image<Scalar>* im : {&i0, &i45, &i90, &i135}) {
      if (im->rows() != intrinsics.height || im->cols() != intrinsics.width)
        throw std::invalid_argument("PolarizationFrame: image size does not match intrinsics");
      if ((*im < Scalar(0)).any()) throw std::invalid_argument("PolarizationFrame: negative intensity");
    }
  }
};

template <typename Scalar>
struct StokesImage {
  Image<Scalar> s0, s1, s2;
};

/// Average intensity, degree and angle of linear polarization per pixel.
/// The three maps share one mask.
template <typename Scalar>
struct PolarizationState {
  ScalarMap<Scalar> aolp, dolp, iavg;
};

template <typename Scalar>
struct Stokes {
  Scalar s0, s1, s2;
};

template <typename Scalar>
struct PixelState {
  Scalar iavg{0}, dolp{0}, aolp{0};
  bool valid{false};
};

/// Transmitted intensity through a polarizer at `polarizer` radians.
template <typename Scalar>
Scalar polarizer_intensity(Scalar iavg, Scalar dolp, Scalar aolp, Scalar polarizer) {
  return iavg + dolp * iavg * std::cos(Scalar(2) * (polarizer - aolp));
}

template <typename Scalar>
std::array<Scalar, 4> synthesize_intensities(Scalar iavg, Scalar dolp, Scalar aolp) {
  const Scalar q = kPi<Scalar> / Scalar(4);
  return {polarizer_intensity(iavg, dolp, aolp, Scalar(0)), polarizer_intensity(iavg, dolp, aolp, q),
          polarizer_intensity(iavg, dolp, aolp, 2 * q), polarizer_intensity(iavg, dolp, aolp, 3 * q)};
}

template <typename Scalar>
Stokes<Scalar> stokes_from_intensities(Scalar i0, Scalar i45, Scalar i90, Scalar i135) {
  return {i0 + i90, i0 - i90, i45 - i135};
}

/// Pixels with s0 == 0 or DoLP <= threshold are invalid; degenerate pixels
/// report aolp = 0.
template <typename Scalar>
PixelState<Scalar> state_from_stokes(const Stokes<Scalar>& s, Scalar dolp_threshold) {
  PixelState<Scalar> out;
  out.iavg = s.s0 / Scalar(2);
  if (!(s.s0 > Scalar(0))) return out;
  const Scalar lin = std::hypot(s.s1, s.s2);
  out.dolp = std::min(lin / s.s0, Scalar(1));
  if (lin > Scalar(0)) out.aolp = canonical_phase(std::atan2(s.s2, s.s1) / Scalar(2));
  out.valid = out.dolp > dolp_threshold;
  return out;
}

template <typename Scalar>
StokesImage<Scalar> compute_stokes(const PolarizationFrame<Scalar>& frame) {
  return {frame.i0 + frame.i90, frame.i0 - frame.i90, frame.i45 - frame.i135};
}

template <typename Scalar>
PolarizationState<Scalar> extract_state(const StokesImage<Scalar>& stokes, Scalar dolp_threshold) {
  if (!(dolp_threshold >= Scalar(0) && dolp_threshold < Scalar(1)))
    throw std::invalid_argument("extract_state: threshold must lie in [0, 1)");
  const Eigen::Index rows = stokes.s0.rows(), cols = stokes.s0.cols();
  PolarizationState<Scalar> out{ScalarMap<Scalar>(rows, cols), ScalarMap<Scalar>(rows, cols),
                                ScalarMap<Scalar>(rows, cols)};
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto px = state_from_stokes<Scalar>({stokes.s0(r, c), stokes.s1(r, c), stokes.s2(r, c)}, dolp_threshold);
      out.aolp.values(r, c) = px.aolp;
      out.dolp.values(r, c) = px.dolp;
      out.iavg.values(r, c) = px.iavg;
      out.aolp.mask(r, c) = out.dolp.mask(r, c) = out.iavg.mask(r, c) = px.valid;
    }
  }
  return out;
}

/// Normalized 1D Gaussian taps for radius ceil(3 sigma).
template <typename Scalar>
std::vector<Scalar> gaussian_kernel(Scalar sigma) {
  if (!(sigma >= Scalar(0))) throw std::invalid_argument("gaussian_blur: sigma must be non-negative");
  const int radius = static_cast<int>(std::ceil(Scalar(3) * sigma));
  std::vector<Scalar> taps(2 * radius + 1, Scalar(1));
  if (radius == 0) return taps;
  Scalar sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-Scalar(i * i) / (Scalar(2) * sigma * sigma));
    sum += taps[i + radius];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

/// Separable Gaussian blur with border replication; sigma 0 is the identity.
template <typename Scalar>
Image<Scalar> gaussian_blur(const Image<Scalar>& img, Scalar sigma) {
  const auto taps = gaussian_kernel(sigma);
  const int radius = static_cast<int>(taps.size() / 2);
  if (radius == 0) return img;
  const Eigen::Index rows = img.rows(), cols = img.cols();
  Image<Scalar> tmp(rows, cols), out(rows, cols);
  auto clampi = [](Eigen::Index i, Eigen::Index n) { return std::clamp<Eigen::Index>(i, 0, n - 1); };
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      Scalar acc = 0;
      for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * img(r, clampi(c + k, cols));
      tmp(r, c) = acc;
    }
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      Scalar acc = 0;
      for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * tmp(clampi(r + k, rows), c);
      out(r, c) = acc;
    }
  return out;
}

template <typename Scalar>
PolarizationFrame<Scalar> gaussian_blur(const PolarizationFrame<Scalar>& frame, Scalar sigma) {
  return {gaussian_blur(frame.i0, sigma), gaussian_blur(frame.i45, sigma), gaussian_blur(frame.i90, sigma),
          gaussian_blur(frame.i135, sigma), frame.intrinsics};
}

/// Blurs the values of a map; the mask is left unchanged.
template <typename Scalar>
ScalarMap<Scalar> gaussian_blur(const ScalarMap<Scalar>& map, Scalar sigma) {
  ScalarMap<Scalar> out = map;
  out.values = gaussian_blur(map.values, sigma);
  return out;
}

/// 2x2 micro-polarizer layout; entries are orientations in degrees.
using MosaicPattern = std::array<std::array<int, 2>, 2>;

inline void validate_pattern(const MosaicPattern& p) {
  std::array<int, 4> seen{};
  for (const auto& row : p)
    for (int a : row) {
      const int slot = a == 0 ? 0 : a == 45 ? 1 : a == 90 ? 2 : a == 135 ? 3 : -1;
      if (slot < 0) throw std::invalid_argument("mosaic pattern entry must be one of 0, 45, 90, 135");
      ++seen[slot];
    }
  for (int n : seen)
    if (n != 1) throw std::invalid_argument("mosaic pattern is not a permutation of {0, 45, 90, 135}");
}

/// Splits a division-of-focal-plane mosaic into four half-resolution images
/// by plain 2x2 subsampling. `raw_intrinsics` describe the full-resolution
/// sensor; the returned intrinsics refer to the superpixel grid.
template <typename Scalar>
PolarizationFrame<Scalar> decode_mosaic(const Image<Scalar>& raw, const MosaicPattern& pattern,
                                        const CameraIntrinsics<Scalar>& raw_intrinsics) {
  validate_pattern(pattern);
  if (raw.rows() % 2 != 0 || raw.cols() % 2 != 0)
    throw std::invalid_argument("decode_mosaic: raw image dimensions must be even");
  const Eigen::Index h = raw.rows() / 2, w = raw.cols() / 2;
  PolarizationFrame<Scalar> frame;
  frame.intrinsics = raw_intrinsics.scaled(Scalar(0.5));
  frame.intrinsics.width = static_cast<int>(w);
  frame.intrinsics.height = static_cast<int>(h);
  for (int dr = 0; dr < 2; ++dr)
    for (int dc = 0; dc < 2; ++dc) {
      Image<Scalar> sub(h, w);
      for (Eigen::Index r = 0; r < h; ++r)
        for (Eigen::Index c = 0; c < w; ++c) sub(r, c) = raw(2 * r + dr, 2 * c + dc);
      switch (pattern[dr][dc]) {
        case 0: frame.i0 = std::move(sub); break;
        case 45: frame.i45 = std::move(sub); break;
        case 90: frame.i90 = std::move(sub); break;
        default: frame.i135 = std::move(sub); break;
      }
    }
  return frame;
}

/// Parses orientation labels such as [["0","45"],["135","90"]].
inline MosaicPattern parse_pattern(const std::array<std::array<std::string, 2>, 2>& labels) {
  MosaicPattern p{};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      try {
        size_t used = 0;
        p[r][c] = std::stoi(labels[r][c], &used);
        if (used != labels[r][c].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw std::invalid_argument("mosaic pattern label is not an integer angle: " + labels[r][c]);
      }
    }
  validate_pattern(p);
  return p;
}

}  // namespace ppa
