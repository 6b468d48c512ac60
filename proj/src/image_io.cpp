#include "rx/image_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "rx/error.hpp"

namespace rx {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors through longjmp; these helpers keep only trivially
// destructible locals between setjmp and the libpng calls.
bool read_impl(std::FILE* fp, GrayImage* out, std::vector<png_byte>* row) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  out->width = static_cast<int>(png_get_image_width(png, info));
  out->height = static_cast<int>(png_get_image_height(png, info));
  out->bit_depth = png_get_bit_depth(png, info);
  row->resize(png_get_rowbytes(png, info));
  out->pixels.resize(static_cast<std::size_t>(out->width) * out->height);
  for (int r = 0; r < out->height; ++r) {
    png_read_row(png, row->data(), nullptr);
    for (int c = 0; c < out->width; ++c) {
      std::uint16_t v;
      if (out->bit_depth == 16) {
        v = static_cast<std::uint16_t>((*row)[2 * c] | ((*row)[2 * c + 1] << 8));
      } else {
        v = (*row)[c];
      }
      out->pixels[static_cast<std::size_t>(r) * out->width + c] = v;
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool write_impl(std::FILE* fp, const GrayImage* image, std::vector<png_byte>* row) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image->width), static_cast<png_uint_32>(image->height),
               image->bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int bytes = image->bit_depth == 16 ? 2 : 1;
  row->resize(static_cast<std::size_t>(image->width) * bytes);
  for (int r = 0; r < image->height; ++r) {
    for (int c = 0; c < image->width; ++c) {
      const std::uint16_t v = image->at(c, r);
      if (bytes == 2) {
        (*row)[2 * c] = static_cast<png_byte>(v >> 8);  // PNG stores big-endian
        (*row)[2 * c + 1] = static_cast<png_byte>(v & 0xff);
      } else {
        (*row)[c] = static_cast<png_byte>(v);
      }
    }
    png_write_row(png, row->data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

GrayImage read_png_gray(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorKind::MissingAsset, "missing asset: " + path.string());
  GrayImage image;
  std::vector<png_byte> row;
  if (!read_impl(fp.get(), &image, &row)) throw Error(ErrorKind::Io, "cannot decode PNG " + path.string());
  return image;
}

void write_png_gray(const std::filesystem::path& path, const GrayImage& image) {
  if (image.bit_depth != 8 && image.bit_depth != 16)
    throw Error(ErrorKind::InvalidArgument, "PNG bit depth must be 8 or 16");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorKind::Io, "cannot write " + path.string());
  std::vector<png_byte> row;
  if (!write_impl(fp.get(), &image, &row)) throw Error(ErrorKind::Io, "cannot encode PNG " + path.string());
}

DepthMap read_depth_png(const std::filesystem::path& path, double meters_per_unit) {
  const auto image = read_png_gray(path);
  std::vector<double> values(image.pixels.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = image.pixels[i] * meters_per_unit;
  return DepthMap(image.width, image.height, std::move(values));
}

void write_depth_png(const std::filesystem::path& path, const DepthMap& depth, double meters_per_unit) {
  GrayImage image{depth.width(), depth.height(), 16, {}};
  image.pixels.reserve(depth.values().size());
  for (double d : depth.values()) {
    const double units = std::round(d / meters_per_unit);
    if (units < 0.0 || units > 65535.0)
      throw Error(ErrorKind::InvalidArgument, "depth value does not fit a 16-bit PNG");
    image.pixels.push_back(static_cast<std::uint16_t>(units));
  }
  write_png_gray(path, image);
}

}  // namespace rx
