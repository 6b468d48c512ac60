#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rx/geometry.hpp"

namespace rx {

/// Single-channel image as loaded from PNG (8- or 16-bit samples widened to u16).
struct GrayImage {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> pixels;

  std::uint16_t at(int col, int row) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

GrayImage read_png_gray(const std::filesystem::path& path);
void write_png_gray(const std::filesystem::path& path, const GrayImage& image);

/// 16-bit depth PNG; each sample times `meters_per_unit` is the depth, 0 is invalid.
DepthMap read_depth_png(const std::filesystem::path& path, double meters_per_unit = 0.001);
/// Rounds depth / meters_per_unit to the nearest u16; throws if out of range.
void write_depth_png(const std::filesystem::path& path, const DepthMap& depth,
                     double meters_per_unit = 0.001);

}  // namespace rx
