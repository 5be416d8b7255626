#include "ppa/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "ppa/errors.hpp"

namespace ppa::io {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw FormatError(std::string("png: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

void write_png(const std::filesystem::path& path, const Image<double>& img, int bit_depth) {
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  if (!png) throw IoError("png: cannot allocate writer");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  const auto width = static_cast<png_uint_32>(img.cols());
  const auto height = static_cast<png_uint_32>(img.rows());
  png_init_io(png, file.get());
  png_set_compression_level(png, 1);
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const int bytes = bit_depth / 8;
  const double full = bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<png_byte> row(static_cast<std::size_t>(width) * bytes);
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const auto q = static_cast<std::uint32_t>(std::lround(std::clamp(img(r, c), 0.0, 1.0) * full));
      if (bytes == 2) {
        row[2 * c] = static_cast<png_byte>(q >> 8);  // PNG samples are big-endian
        row[2 * c + 1] = static_cast<png_byte>(q & 0xff);
      } else {
        row[c] = static_cast<png_byte>(q);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

}  // namespace

Image<double> read_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError("not a PNG file: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  if (!png) throw IoError("png: cannot allocate reader");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY) throw FormatError("expected a grayscale PNG: " + path.string());
  if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int bytes = depth == 16 ? 2 : 1;
  const double full = depth == 16 ? 65535.0 : 255.0;
  Image<double> img(height, width);
  std::vector<png_byte> row(png_get_rowbytes(png, info));
  for (png_uint_32 r = 0; r < height; ++r) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 c = 0; c < width; ++c) {
      const std::uint32_t q = bytes == 2 ? (std::uint32_t(row[2 * c]) << 8) | row[2 * c + 1] : row[c];
      img(r, c) = double(q) / full;
    }
  }
  png_read_end(png, nullptr);
  return img;
}

void write_png16(const std::filesystem::path& path, const Image<double>& img) { write_png(path, img, 16); }
void write_png8(const std::filesystem::path& path, const Image<double>& img) { write_png(path, img, 8); }

void write_mask_png(const std::filesystem::path& path, const Mask& mask) { write_png(path, mask.cast<double>(), 8); }

Mask read_mask_png(const std::filesystem::path& path) { return read_png(path) > 0.0; }

void write_pfm(const std::filesystem::path& path, const Image<double>& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  out << "Pf\n" << img.cols() << ' ' << img.rows() << "\n-1.0\n";
  std::vector<char> row(static_cast<std::size_t>(img.cols()) * 4);
  for (Eigen::Index r = img.rows(); r-- > 0;) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(img(r, c)));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      std::memcpy(&row[4 * c], &bits, 4);
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Image<double> read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  long width = 0, height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (!in || (magic != "Pf" && magic != "PF") || width <= 0 || height <= 0 || scale == 0.0)
    throw FormatError("malformed PFM header: " + path.string());
  in.get();  // single whitespace byte before the raster
  const int channels = magic == "PF" ? 3 : 1;
  const bool little = scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);
  Image<double> img(height, width);
  std::vector<char> row(static_cast<std::size_t>(width) * 4 * channels);
  for (long r = height; r-- > 0;) {
    if (!in.read(row.data(), static_cast<std::streamsize>(row.size())))
      throw FormatError("truncated PFM raster: " + path.string());
    for (long c = 0; c < width; ++c) {
      std::uint32_t bits;
      std::memcpy(&bits, &row[4 * channels * c], 4);
      if (swap) bits = __builtin_bswap32(bits);
      img(r, c) = static_cast<double>(std::bit_cast<float>(bits)) * std::abs(scale);
    }
  }
  return img;
}

}  // namespace ppa::io
