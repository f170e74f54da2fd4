#pragma once

#include <array>
#include <span>

#include "error.hpp"

namespace homlab {

struct Point2 {
  double u = 0.0;
  double v = 0.0;
};

// 3x3 projective map, row-major H11..H33. Canonical form has H33 == 1.
struct HomographyMatrix {
  std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

  double& At(int row, int col) { return h[row * 3 + col]; }
  double At(int row, int col) const { return h[row * 3 + col]; }

  double Det() const;

  // Divides all entries by H33 and verifies invertibility.
  // Throws kSingularMatrix when H33 vanishes or |det| <= 1e-12 afterwards.
  HomographyMatrix Normalized() const;

  static HomographyMatrix Identity() { return HomographyMatrix{}; }
  static HomographyMatrix Translation(double du, double dv) {
    return HomographyMatrix{{1, 0, du, 0, 1, dv, 0, 0, 1}};
  }
};

// Four reference points ordered top-left, top-right, bottom-right,
// bottom-left of an axis-aligned square.
struct CornerSet {
  std::array<Point2, 4> pts;
};

// Builds the corners of the axis-aligned square with top-left (x0, y0) and
// the given side length.
CornerSet MakeSquareCorners(double x0, double y0, double side);

// Eight pixel-valued corner displacements, ordered du1, dv1, ..., du4, dv4
// matching the CornerSet ordering.
struct FourPointOffsets {
  std::array<double, 8> d{};

  bool AllZero() const {
    for (double x : d)
      if (x != 0.0) return false;
    return true;
  }
};

// Applies the projective map: (u', v') = ((H11 u + H12 v + H13) / w,
// (H21 u + H22 v + H23) / w) with w = H31 u + H32 v + H33.
// Throws kDegenerateProjection when |w| <= 1e-12.
Point2 ProjectPoint(const HomographyMatrix& h, Point2 p);

// Exact homography from four correspondences: solves the standard 8x8
// linear system (H33 fixed at 1) with partial-pivot Gaussian elimination.
// Throws kSingularSystem on rank deficiency.
HomographyMatrix HomographyFromCorrespondences(const std::array<Point2, 4>& src,
                                               const std::array<Point2, 4>& dst);

// Homography mapping each corner to corner + offset.
HomographyMatrix OffsetsToHomography(const CornerSet& corners,
                                     const FourPointOffsets& offsets);

// Offsets of the projected corners relative to the corners themselves.
FourPointOffsets HomographyToOffsets(const HomographyMatrix& h,
                                     const CornerSet& corners);

// Throws kSingularMatrix when |det| <= 1e-12.
HomographyMatrix Invert(const HomographyMatrix& h);

// Returns the normalized matrix product a * b, i.e. the map applying b first.
HomographyMatrix Compose(const HomographyMatrix& a, const HomographyMatrix& b);

struct PointPair {
  Point2 src;
  Point2 dst;
};

// Least-squares homography from n >= 4 correspondences via normal equations
// on the stacked 2n x 8 system. Inputs are Hartley-normalized (centroid
// translation, mean distance sqrt(2)) before solving unless disabled.
// Throws kSingularSystem on rank deficiency.
HomographyMatrix DltLeastSquares(std::span<const PointPair> pairs,
                                 bool hartley_normalize = true);

}  // namespace homlab
