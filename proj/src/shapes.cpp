#include "shapes.hpp"

#include <algorithm>
#include <cmath>

namespace homlab {

namespace {

// Signed distance from the shape boundary, positive inside, measured in the
// shape's local (rotation-removed) frame. Returns a negative value for
// points outside.
double InnerDistance(const ShapeSpec& s, double px, double py) {
  const double dx = px - s.center.u;
  const double dy = py - s.center.v;
  const double c = std::cos(s.rotation);
  const double sn = std::sin(s.rotation);
  const double lx = c * dx + sn * dy;
  const double ly = -sn * dx + c * dy;
  const double half = 0.5 * s.size;

  switch (s.kind) {
    case ShapeKind::kSquare:
      return half - std::max(std::abs(lx), std::abs(ly));
    case ShapeKind::kCircle:
      return half - std::hypot(lx, ly);
    case ShapeKind::kTriangle: {
      // Equilateral, point-up at rotation 0, circumradius = half.
      double min_d = half;
      for (int i = 0; i < 3; ++i) {
        const double a0 = -1.5707963267948966 + 2.0943951023931953 * i;
        const double a1 = -1.5707963267948966 + 2.0943951023931953 * (i + 1);
        const double vx0 = half * std::cos(a0), vy0 = half * std::sin(a0);
        const double vx1 = half * std::cos(a1), vy1 = half * std::sin(a1);
        const double ex = vx1 - vx0, ey = vy1 - vy0;
        const double len = std::hypot(ex, ey);
        // Inward distance from edge i (vertices are counter-clockwise in
        // image coordinates with y down).
        const double d = (ex * (ly - vy0) - ey * (lx - vx0)) / len;
        min_d = std::min(min_d, d);
      }
      return min_d;
    }
  }
  return -1.0;
}

// Coverage test. Squares use a half-open box in the local frame so an
// axis-aligned square of integer side covers exactly size^2 pixel centers.
bool Covers(const ShapeSpec& s, double px, double py) {
  if (s.kind == ShapeKind::kSquare) {
    const double dx = px - s.center.u;
    const double dy = py - s.center.v;
    const double c = std::cos(s.rotation);
    const double sn = std::sin(s.rotation);
    const double lx = c * dx + sn * dy;
    const double ly = -sn * dx + c * dy;
    const double half = 0.5 * s.size;
    return lx >= -half && lx < half && ly >= -half && ly < half;
  }
  return InnerDistance(s, px, py) > 0.0;
}

template <typename SetPixel>
void Rasterize(int width, int height, const ShapeSpec& s, const SetPixel& set_pixel,
               bool boundary_only) {
  const double reach = 0.5 * s.size * 1.4142135623730951 + 1.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(s.center.u - reach)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(s.center.u + reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(s.center.v - reach)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(s.center.v + reach)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (!Covers(s, x, y)) continue;
      if (boundary_only && InnerDistance(s, x, y) >= s.outline_width) continue;
      set_pixel(x, y);
    }
  }
}

}  // namespace

void DrawShape(GrayImage& img, const ShapeSpec& s) {
  const bool boundary_only = s.style == ShapeStyle::kOutlined;
  Rasterize(img.width, img.height, s,
            [&](int x, int y) { img.At(x, y) = s.intensity; }, boundary_only);
}

void DrawShapeMask(GrayImage& mask, const ShapeSpec& s, bool boundary_only) {
  ShapeSpec b = s;
  if (boundary_only) b.outline_width = std::max(s.outline_width, 1.0);
  Rasterize(mask.width, mask.height, b, [&](int x, int y) { mask.At(x, y) = 1.0f; },
            boundary_only);
}

}  // namespace homlab
