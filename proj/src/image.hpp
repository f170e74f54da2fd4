#pragma once

#include <cstdint>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"

namespace homlab {

// Single-channel raster, row-major float intensities in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  GrayImage() = default;
  GrayImage(int w, int h, float fill = 0.0f);

  float& At(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  float At(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

  const float* Row(int y) const { return data.data() + static_cast<size_t>(y) * width; }
  float* Row(int y) { return data.data() + static_cast<size_t>(y) * width; }

  bool SameSize(const GrayImage& other) const {
    return width == other.width && height == other.height;
  }
};

// Axis-aligned square crop window, integer pixel units.
struct Rect {
  int x = 0;
  int y = 0;
  int size = 0;
};

// Pixel-center corners of a crop window (top-left, top-right, bottom-right,
// bottom-left); the side spans size - 1 pixels.
CornerSet PatchCorners(const Rect& r);

// Bilinear interpolation at (u, v) in pixel-center coordinates. Coordinates
// outside [0, w-1] x [0, h-1] return 0 (zero fill).
float BilinearSample(const GrayImage& img, double u, double v);

// Warps image content: content at source location p appears at map(p) in the
// output. Internally out(q) = BilinearSample(img, map^{-1}(q)). Output has
// the same dimensions; the identity map returns a bit-identical copy.
GrayImage WarpByHomography(const GrayImage& img, const HomographyMatrix& map);

// Throws kOutOfBounds when the window is not fully inside the image.
GrayImage Crop(const GrayImage& img, const Rect& r);

// Separable binomial 3x3 kernel [1,2,1]/4 per axis with edge-clamp padding.
GrayImage GaussianBlur3x3(const GrayImage& img);

}  // namespace homlab
