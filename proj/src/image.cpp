#include "image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace homlab {

GrayImage::GrayImage(int w, int h, float fill) : width(w), height(h) {
  if (w < 1 || h < 1) {
    Fail(ErrorKind::kInvalidValue,
         "image dimensions must be >= 1, got " + std::to_string(w) + "x" + std::to_string(h));
  }
  data.assign(static_cast<size_t>(w) * h, fill);
}

CornerSet PatchCorners(const Rect& r) {
  return MakeSquareCorners(r.x, r.y, r.size - 1);
}

float BilinearSample(const GrayImage& img, double u, double v) {
  if (u < 0.0 || v < 0.0 || u > img.width - 1 || v > img.height - 1) return 0.0f;
  const int x0 = static_cast<int>(u);
  const int y0 = static_cast<int>(v);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = u - x0;
  const double fy = v - y0;
  const double top = img.At(x0, y0) * (1.0 - fx) + img.At(x1, y0) * fx;
  const double bot = img.At(x0, y1) * (1.0 - fx) + img.At(x1, y1) * fx;
  return static_cast<float>(top * (1.0 - fy) + bot * fy);
}

GrayImage WarpByHomography(const GrayImage& img, const HomographyMatrix& map) {
  const HomographyMatrix inv = Invert(map.Normalized());
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    float* row = out.Row(y);
    for (int x = 0; x < img.width; ++x) {
      const Point2 p = ProjectPoint(inv, {static_cast<double>(x), static_cast<double>(y)});
      row[x] = BilinearSample(img, p.u, p.v);
    }
  }
  return out;
}

GrayImage Crop(const GrayImage& img, const Rect& r) {
  if (r.size < 1 || r.x < 0 || r.y < 0 || r.x + r.size > img.width ||
      r.y + r.size > img.height) {
    Fail(ErrorKind::kOutOfBounds, "crop window exceeds image bounds");
  }
  GrayImage out(r.size, r.size);
  for (int y = 0; y < r.size; ++y) {
    const float* src = img.Row(r.y + y) + r.x;
    std::copy(src, src + r.size, out.Row(y));
  }
  return out;
}

GrayImage GaussianBlur3x3(const GrayImage& img) {
  const int w = img.width, h = img.height;
  GrayImage tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    const float* src = img.Row(y);
    float* dst = tmp.Row(y);
    for (int x = 0; x < w; ++x) {
      const float l = src[std::max(x - 1, 0)];
      const float r = src[std::min(x + 1, w - 1)];
      dst[x] = 0.25f * (l + 2.0f * src[x] + r);
    }
  }
  for (int y = 0; y < h; ++y) {
    const float* up = tmp.Row(std::max(y - 1, 0));
    const float* mid = tmp.Row(y);
    const float* dn = tmp.Row(std::min(y + 1, h - 1));
    float* dst = out.Row(y);
    for (int x = 0; x < w; ++x) {
      dst[x] = 0.25f * (up[x] + 2.0f * mid[x] + dn[x]);
    }
  }
  return out;
}

}  // namespace homlab
