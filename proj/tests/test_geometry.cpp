#include <doctest.h>

#include <cmath>
#include <vector>

#include "geometry.hpp"
#include "rng.hpp"

using namespace homlab;

namespace {

CornerSet UnitSquare() { return MakeSquareCorners(0, 0, 1); }

FourPointOffsets RandomOffsets(Rng& rng, double rho) {
  FourPointOffsets off;
  for (double& d : off.d) d = rng.Uniform(-rho, rho);
  return off;
}

HomographyMatrix RandomValidHomography(Rng& rng) {
  const CornerSet corners = MakeSquareCorners(0, 0, 127);
  return OffsetsToHomography(corners, RandomOffsets(rng, 32.0));
}

}  // namespace

TEST_CASE("project_point identity and translation") {
  const HomographyMatrix id = HomographyMatrix::Identity();
  const Point2 p = ProjectPoint(id, {17.5, -3.0});
  CHECK(p.u == doctest::Approx(17.5).epsilon(1e-12));
  CHECK(p.v == doctest::Approx(-3.0).epsilon(1e-12));

  const HomographyMatrix t = HomographyMatrix::Translation(5, 3);
  const Point2 q = ProjectPoint(t, {0, 0});
  CHECK(q.u == doctest::Approx(5.0));
  CHECK(q.v == doctest::Approx(3.0));
}

TEST_CASE("project_point with perspective denominator") {
  HomographyMatrix h = HomographyMatrix::Identity();
  h.At(2, 0) = 0.01;
  const Point2 p = ProjectPoint(h, {10, 20});
  CHECK(p.u == doctest::Approx(10.0 / 1.1).epsilon(1e-12));
  CHECK(p.v == doctest::Approx(20.0 / 1.1).epsilon(1e-12));
}

TEST_CASE("project_point rejects degenerate denominator") {
  HomographyMatrix h = HomographyMatrix::Identity();
  h.At(2, 0) = -1.0;  // w = -u + 1 vanishes at u = 1
  CHECK_THROWS_AS(ProjectPoint(h, {1.0, 0.0}), Error);
}

TEST_CASE("offsets_to_homography trivial cases") {
  const CornerSet corners = MakeSquareCorners(10, 20, 50);

  const HomographyMatrix id = OffsetsToHomography(corners, FourPointOffsets{});
  for (int i = 0; i < 9; ++i) {
    CHECK(id.h[i] == doctest::Approx(HomographyMatrix::Identity().h[i]).epsilon(1e-12));
  }

  FourPointOffsets uniform;
  for (int i = 0; i < 4; ++i) {
    uniform.d[2 * i] = 4.0;
    uniform.d[2 * i + 1] = -2.0;
  }
  const HomographyMatrix t = OffsetsToHomography(UnitSquare(), uniform);
  CHECK(t.At(0, 2) == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(t.At(1, 2) == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(t.At(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(t.At(2, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("offsets_to_homography reprojects corners within 1e-9") {
  Rng rng(42);
  const CornerSet corners = MakeSquareCorners(0, 0, 127);
  for (int trial = 0; trial < 100; ++trial) {
    const FourPointOffsets off = RandomOffsets(rng, 32.0);
    const HomographyMatrix h = OffsetsToHomography(corners, off);
    for (int i = 0; i < 4; ++i) {
      const Point2 p = ProjectPoint(h, corners.pts[i]);
      CHECK(std::abs(p.u - (corners.pts[i].u + off.d[2 * i])) < 1e-9);
      CHECK(std::abs(p.v - (corners.pts[i].v + off.d[2 * i + 1])) < 1e-9);
    }
  }
}

TEST_CASE("homography_to_offsets matches definitions") {
  const CornerSet corners = MakeSquareCorners(3, 7, 40);
  const FourPointOffsets zero = HomographyToOffsets(HomographyMatrix::Identity(), corners);
  for (double d : zero.d) CHECK(d == doctest::Approx(0.0).epsilon(1e-12));

  const FourPointOffsets t = HomographyToOffsets(HomographyMatrix::Translation(4, -2), corners);
  for (int i = 0; i < 4; ++i) {
    CHECK(t.d[2 * i] == doctest::Approx(4.0));
    CHECK(t.d[2 * i + 1] == doctest::Approx(-2.0));
  }
}

TEST_CASE("offsets round-trip, 10k random draws within 1e-6") {
  Rng rng(7);
  const CornerSet corners = MakeSquareCorners(0, 0, 127);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const FourPointOffsets off = RandomOffsets(rng, 32.0);
    const HomographyMatrix h = OffsetsToHomography(corners, off);
    const FourPointOffsets back = HomographyToOffsets(h, corners);
    for (int k = 0; k < 8; ++k) worst = std::max(worst, std::abs(back.d[k] - off.d[k]));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("invert: identity, translation, random product") {
  const HomographyMatrix id = Invert(HomographyMatrix::Identity());
  for (int i = 0; i < 9; ++i) CHECK(id.h[i] == doctest::Approx(HomographyMatrix::Identity().h[i]));

  const HomographyMatrix t = Invert(HomographyMatrix::Translation(5, 3));
  CHECK(t.At(0, 2) == doctest::Approx(-5.0));
  CHECK(t.At(1, 2) == doctest::Approx(-3.0));

  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const HomographyMatrix h = RandomValidHomography(rng);
    const HomographyMatrix prod = Compose(h, Invert(h));
    for (int i = 0; i < 9; ++i) {
      CHECK(std::abs(prod.h[i] - HomographyMatrix::Identity().h[i]) < 1e-9);
    }
  }
}

TEST_CASE("compose: identity, translations, pointwise property") {
  Rng rng(13);
  const HomographyMatrix h = RandomValidHomography(rng);
  const HomographyMatrix left = Compose(HomographyMatrix::Identity(), h);
  for (int i = 0; i < 9; ++i) CHECK(left.h[i] == doctest::Approx(h.h[i]).epsilon(1e-12));

  const HomographyMatrix ab =
      Compose(HomographyMatrix::Translation(2, 3), HomographyMatrix::Translation(-5, 7));
  CHECK(ab.At(0, 2) == doctest::Approx(-3.0));
  CHECK(ab.At(1, 2) == doctest::Approx(10.0));

  for (int trial = 0; trial < 10; ++trial) {
    const HomographyMatrix a = RandomValidHomography(rng);
    const HomographyMatrix b = RandomValidHomography(rng);
    const HomographyMatrix c = Compose(a, b);
    for (int k = 0; k < 100; ++k) {
      const Point2 p{rng.Uniform(0, 127), rng.Uniform(0, 127)};
      const Point2 via = ProjectPoint(a, ProjectPoint(b, p));
      const Point2 direct = ProjectPoint(c, p);
      CHECK(std::abs(via.u - direct.u) < 1e-9);
      CHECK(std::abs(via.v - direct.v) < 1e-9);
    }
  }
}

TEST_CASE("projection is scale invariant after normalization") {
  Rng rng(17);
  const HomographyMatrix h = RandomValidHomography(rng);
  const Point2 p{33.0, 57.0};
  const Point2 ref = ProjectPoint(h, p);
  for (double lambda : {0.5, 2.0, -3.0}) {
    HomographyMatrix scaled = h;
    for (double& x : scaled.h) x *= lambda;
    const Point2 q = ProjectPoint(scaled.Normalized(), p);
    CHECK(std::abs(q.u - ref.u) < 1e-9);
    CHECK(std::abs(q.v - ref.v) < 1e-9);
  }
}

TEST_CASE("invert is an involution") {
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const HomographyMatrix h = RandomValidHomography(rng);
    const HomographyMatrix back = Invert(Invert(h));
    for (int i = 0; i < 9; ++i) CHECK(std::abs(back.h[i] - h.h[i]) < 1e-9);
  }
}

TEST_CASE("dlt recovers a known homography from exact data") {
  Rng rng(23);
  const HomographyMatrix truth = RandomValidHomography(rng);

  SUBCASE("4 exact correspondences") {
    std::vector<PointPair> pairs;
    const CornerSet corners = MakeSquareCorners(5, 9, 100);
    for (const Point2& c : corners.pts) pairs.push_back({c, ProjectPoint(truth, c)});
    const HomographyMatrix rec = DltLeastSquares(pairs);
    for (int i = 0; i < 9; ++i) CHECK(std::abs(rec.h[i] - truth.h[i]) < 1e-8);
  }

  SUBCASE("20 exact correspondences, overdetermined") {
    std::vector<PointPair> pairs;
    for (int k = 0; k < 20; ++k) {
      const Point2 p{rng.Uniform(0, 127), rng.Uniform(0, 127)};
      pairs.push_back({p, ProjectPoint(truth, p)});
    }
    const HomographyMatrix rec = DltLeastSquares(pairs);
    for (int i = 0; i < 9; ++i) CHECK(std::abs(rec.h[i] - truth.h[i]) < 1e-8);
  }

  SUBCASE("exactness does not depend on Hartley normalization") {
    std::vector<PointPair> pairs;
    for (int k = 0; k < 12; ++k) {
      const Point2 p{rng.Uniform(0, 127), rng.Uniform(0, 127)};
      pairs.push_back({p, ProjectPoint(truth, p)});
    }
    const HomographyMatrix with = DltLeastSquares(pairs, true);
    const HomographyMatrix without = DltLeastSquares(pairs, false);
    for (int i = 0; i < 9; ++i) CHECK(std::abs(with.h[i] - without.h[i]) < 1e-8);
  }
}

TEST_CASE("dlt rejects collinear source points") {
  std::vector<PointPair> pairs;
  for (int k = 0; k < 6; ++k) {
    const double x = 10.0 * k;
    pairs.push_back({{x, 2.0 * x + 1.0}, {x + 5, 2.0 * x}});
  }
  CHECK_THROWS_AS(DltLeastSquares(pairs), Error);
}

TEST_CASE("dlt requires at least four pairs") {
  std::vector<PointPair> pairs{{{0, 0}, {1, 1}}, {{1, 0}, {2, 1}}, {{0, 1}, {1, 2}}};
  CHECK_THROWS_AS(DltLeastSquares(pairs), Error);
}

TEST_CASE("degenerate corner configurations are rejected") {
  // Three collinear source corners make the 8x8 system rank-deficient.
  const std::array<Point2, 4> src{Point2{0, 0}, Point2{1, 0}, Point2{2, 0}, Point2{0, 1}};
  const std::array<Point2, 4> dst{Point2{0, 0}, Point2{1, 1}, Point2{2, 0}, Point2{1, 3}};
  CHECK_THROWS_AS(HomographyFromCorrespondences(src, dst), Error);
}
