#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace homlab {

namespace {

constexpr double kProjectionEps = 1e-12;
constexpr double kDetEps = 1e-12;

// Partial-pivot Gaussian elimination, in place. a is n x n row-major,
// b the right-hand side; the solution is written back into b.
void SolveLinear(double* a, double* b, int n) {
  double max_abs = 0.0;
  for (int i = 0; i < n * n; ++i) max_abs = std::max(max_abs, std::abs(a[i]));
  const double pivot_eps = 1e-12 * (1.0 + max_abs);

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int row = col + 1; row < n; ++row) {
      if (std::abs(a[row * n + col]) > std::abs(a[pivot * n + col])) pivot = row;
    }
    if (std::abs(a[pivot * n + col]) <= pivot_eps) {
      Fail(ErrorKind::kSingularSystem, "linear system is rank-deficient");
    }
    if (pivot != col) {
      for (int k = col; k < n; ++k) std::swap(a[pivot * n + k], a[col * n + k]);
      std::swap(b[pivot], b[col]);
    }
    const double inv = 1.0 / a[col * n + col];
    for (int row = col + 1; row < n; ++row) {
      const double f = a[row * n + col] * inv;
      if (f == 0.0) continue;
      for (int k = col; k < n; ++k) a[row * n + k] -= f * a[col * n + k];
      b[row] -= f * b[col];
    }
  }
  for (int row = n - 1; row >= 0; --row) {
    double s = b[row];
    for (int k = row + 1; k < n; ++k) s -= a[row * n + k] * b[k];
    b[row] = s / a[row * n + row];
  }
}

struct Similarity {
  double scale = 1.0;
  double tu = 0.0;
  double tv = 0.0;

  Point2 Apply(Point2 p) const { return {scale * (p.u + tu), scale * (p.v + tv)}; }
};

// Hartley conditioning: translate the centroid to the origin and scale the
// mean distance to sqrt(2).
Similarity HartleyTransform(std::span<const PointPair> pairs, bool use_dst) {
  double cu = 0.0, cv = 0.0;
  for (const PointPair& p : pairs) {
    const Point2& q = use_dst ? p.dst : p.src;
    cu += q.u;
    cv += q.v;
  }
  const double n = static_cast<double>(pairs.size());
  cu /= n;
  cv /= n;
  double mean_dist = 0.0;
  for (const PointPair& p : pairs) {
    const Point2& q = use_dst ? p.dst : p.src;
    mean_dist += std::hypot(q.u - cu, q.v - cv);
  }
  mean_dist /= n;
  if (mean_dist <= kProjectionEps) {
    Fail(ErrorKind::kSingularSystem, "all points coincide");
  }
  return {std::sqrt(2.0) / mean_dist, -cu, -cv};
}

HomographyMatrix SolveDlt(std::span<const PointPair> pairs) {
  // Row pair per correspondence (x, y) -> (X, Y), unknowns H11..H32:
  //   x H11 + y H12 + H13 - X x H31 - X y H32 = X
  //   x H21 + y H22 + H23 - Y x H31 - Y y H32 = Y
  const int n = static_cast<int>(pairs.size());
  double ata[64] = {0};
  double atb[8] = {0};
  for (int i = 0; i < n; ++i) {
    const double x = pairs[i].src.u, y = pairs[i].src.v;
    const double xd = pairs[i].dst.u, yd = pairs[i].dst.v;
    const double r0[8] = {x, y, 1, 0, 0, 0, -xd * x, -xd * y};
    const double r1[8] = {0, 0, 0, x, y, 1, -yd * x, -yd * y};
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) ata[a * 8 + b] += r0[a] * r0[b] + r1[a] * r1[b];
      atb[a] += r0[a] * xd + r1[a] * yd;
    }
  }
  SolveLinear(ata, atb, 8);
  return HomographyMatrix{{atb[0], atb[1], atb[2], atb[3], atb[4], atb[5], atb[6], atb[7], 1.0}};
}

}  // namespace

double HomographyMatrix::Det() const {
  return h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6]) +
         h[2] * (h[3] * h[7] - h[4] * h[6]);
}

HomographyMatrix HomographyMatrix::Normalized() const {
  if (std::abs(h[8]) <= kProjectionEps) {
    Fail(ErrorKind::kSingularMatrix, "homography cannot be normalized: H33 ~ 0");
  }
  HomographyMatrix out;
  const double inv = 1.0 / h[8];
  for (int i = 0; i < 9; ++i) out.h[i] = h[i] * inv;
  out.h[8] = 1.0;
  if (std::abs(out.Det()) <= kDetEps) {
    Fail(ErrorKind::kSingularMatrix, "homography is singular after normalization");
  }
  return out;
}

CornerSet MakeSquareCorners(double x0, double y0, double side) {
  return CornerSet{{Point2{x0, y0}, Point2{x0 + side, y0}, Point2{x0 + side, y0 + side},
                    Point2{x0, y0 + side}}};
}

Point2 ProjectPoint(const HomographyMatrix& h, Point2 p) {
  const double w = h.h[6] * p.u + h.h[7] * p.v + h.h[8];
  if (std::abs(w) <= kProjectionEps) {
    Fail(ErrorKind::kDegenerateProjection, "point maps toward the line at infinity");
  }
  return {(h.h[0] * p.u + h.h[1] * p.v + h.h[2]) / w,
          (h.h[3] * p.u + h.h[4] * p.v + h.h[5]) / w};
}

HomographyMatrix HomographyFromCorrespondences(const std::array<Point2, 4>& src,
                                               const std::array<Point2, 4>& dst) {
  double a[64];
  double b[8];
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].u, y = src[i].v;
    const double xd = dst[i].u, yd = dst[i].v;
    double* r0 = a + 16 * i;
    double* r1 = a + 16 * i + 8;
    r0[0] = x; r0[1] = y; r0[2] = 1; r0[3] = 0; r0[4] = 0; r0[5] = 0;
    r0[6] = -xd * x; r0[7] = -xd * y;
    r1[0] = 0; r1[1] = 0; r1[2] = 0; r1[3] = x; r1[4] = y; r1[5] = 1;
    r1[6] = -yd * x; r1[7] = -yd * y;
    b[2 * i] = xd;
    b[2 * i + 1] = yd;
  }
  SolveLinear(a, b, 8);
  return HomographyMatrix{{b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7], 1.0}}.Normalized();
}

HomographyMatrix OffsetsToHomography(const CornerSet& corners, const FourPointOffsets& offsets) {
  if (offsets.AllZero()) return HomographyMatrix::Identity();
  std::array<Point2, 4> dst;
  for (int i = 0; i < 4; ++i) {
    dst[i] = {corners.pts[i].u + offsets.d[2 * i], corners.pts[i].v + offsets.d[2 * i + 1]};
  }
  return HomographyFromCorrespondences(corners.pts, dst);
}

FourPointOffsets HomographyToOffsets(const HomographyMatrix& h, const CornerSet& corners) {
  FourPointOffsets out;
  for (int i = 0; i < 4; ++i) {
    const Point2 p = ProjectPoint(h, corners.pts[i]);
    out.d[2 * i] = p.u - corners.pts[i].u;
    out.d[2 * i + 1] = p.v - corners.pts[i].v;
  }
  return out;
}

HomographyMatrix Invert(const HomographyMatrix& h) {
  const double det = h.Det();
  if (std::abs(det) <= kDetEps) {
    Fail(ErrorKind::kSingularMatrix, "homography is singular");
  }
  const auto& m = h.h;
  const double inv = 1.0 / det;
  HomographyMatrix out{{(m[4] * m[8] - m[5] * m[7]) * inv, (m[2] * m[7] - m[1] * m[8]) * inv,
                        (m[1] * m[5] - m[2] * m[4]) * inv, (m[5] * m[6] - m[3] * m[8]) * inv,
                        (m[0] * m[8] - m[2] * m[6]) * inv, (m[2] * m[3] - m[0] * m[5]) * inv,
                        (m[3] * m[7] - m[4] * m[6]) * inv, (m[1] * m[6] - m[0] * m[7]) * inv,
                        (m[0] * m[4] - m[1] * m[3]) * inv}};
  return out.Normalized();
}

HomographyMatrix Compose(const HomographyMatrix& a, const HomographyMatrix& b) {
  HomographyMatrix out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      out.At(r, c) = a.At(r, 0) * b.At(0, c) + a.At(r, 1) * b.At(1, c) + a.At(r, 2) * b.At(2, c);
    }
  }
  return out.Normalized();
}

HomographyMatrix DltLeastSquares(std::span<const PointPair> pairs, bool hartley_normalize) {
  if (pairs.size() < 4) {
    Fail(ErrorKind::kSingularSystem, "DLT requires at least 4 correspondences");
  }
  if (!hartley_normalize) return SolveDlt(pairs).Normalized();

  const Similarity ts = HartleyTransform(pairs, /*use_dst=*/false);
  const Similarity td = HartleyTransform(pairs, /*use_dst=*/true);
  std::vector<PointPair> conditioned(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    conditioned[i] = {ts.Apply(pairs[i].src), td.Apply(pairs[i].dst)};
  }
  const HomographyMatrix hn = SolveDlt(conditioned);

  // H = Td^{-1} * Hn * Ts with Ts, Td the similarity transforms.
  const HomographyMatrix mts{{ts.scale, 0, ts.scale * ts.tu, 0, ts.scale, ts.scale * ts.tv, 0, 0, 1}};
  const HomographyMatrix mtd_inv{
      {1.0 / td.scale, 0, -td.tu, 0, 1.0 / td.scale, -td.tv, 0, 0, 1}};
  return Compose(mtd_inv, Compose(hn, mts));
}

}  // namespace homlab
