#pragma once

#include <vector>

#include "image.hpp"

namespace homlab {

enum class ShapeKind { kSquare, kTriangle, kCircle };
enum class ShapeStyle { kFilled, kOutlined };

// One simple geometric entity. size is the side length for squares, the
// circumscribed-circle diameter for triangles, and the diameter for circles.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::kSquare;
  Point2 center;
  double size = 0.0;
  float intensity = 1.0f;
  ShapeStyle style = ShapeStyle::kFilled;
  double outline_width = 1.0;
  double rotation = 0.0;  // radians
};

// Hard rasterization at pixel centers, no anti-aliasing. Filled shapes set
// every covered pixel to the shape intensity; outlined shapes set only the
// inner boundary band of the given width. Pixels outside the image are
// clipped. Deterministic: same spec, same pixels.
void DrawShape(GrayImage& img, const ShapeSpec& s);

// Mask variant used for focus-analysis statistics: sets covered pixels of
// the filled shape (or its boundary band) to 1 in the mask.
void DrawShapeMask(GrayImage& mask, const ShapeSpec& s, bool boundary_only);

}  // namespace homlab
