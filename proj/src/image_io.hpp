#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "image.hpp"

namespace homlab {

// Interleaved 8-bit RGB raster, used only for visualization output.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // r, g, b per pixel, row-major

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0) {}

  uint8_t* Pixel(int x, int y) { return data.data() + (static_cast<size_t>(y) * width + x) * 3; }
};

// Reads PGM (P5, 8-bit, maxval 255), PPM (P6, converted by the luminance
// weights 0.299 R + 0.587 G + 0.114 B) and, when built with libpng, 8-bit
// gray or RGB PNG. Values map to [0, 1] by /255.
// Throws kUnsupportedFormat / kCorruptFile / kIo.
GrayImage ReadImage(const std::filesystem::path& path);

// Binary PGM, maxval 255; intensities quantized by round(v * 255).
void WritePgm(const GrayImage& img, const std::filesystem::path& path);

// Binary PPM, maxval 255.
void WritePpm(const RgbImage& img, const std::filesystem::path& path);

bool PngSupported();

}  // namespace homlab
