#pragma once

#include <filesystem>

#include "ppa/image.hpp"

namespace ppa::io {

/// Grayscale PNG (8 or 16 bit) scaled to [0, 1].
Image<double> read_png(const std::filesystem::path& path);

/// 16-bit grayscale PNG; values are clamped to [0, 1] and quantized.
void write_png16(const std::filesystem::path& path, const Image<double>& img);
void write_png8(const std::filesystem::path& path, const Image<double>& img);

/// 8-bit PNG with 0 for invalid and 255 for valid pixels.
void write_mask_png(const std::filesystem::path& path, const Mask& mask);
/// Any non-zero pixel counts as valid.
Mask read_mask_png(const std::filesystem::path& path);

/// Single-channel Portable Float Map, little-endian (scale -1.0), stored
/// bottom row first as the format requires. Values are written as float32.
void write_pfm(const std::filesystem::path& path, const Image<double>& img);
/// Reads "Pf" maps of either endianness; for "PF" colour maps the first
/// channel is returned.
Image<double> read_pfm(const std::filesystem::path& path);

}  // namespace ppa::io
