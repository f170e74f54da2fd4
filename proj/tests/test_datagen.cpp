#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <vector>

#include "datagen.hpp"
#include "image_io.hpp"
#include "support/corpora.hpp"

using namespace homlab;
using testsupport::TempDir;

namespace {

GenConfig SmallGen(uint64_t seed = 0) {
  GenConfig cfg;
  cfg.patch_size = 64;
  cfg.rho = 16.0;
  cfg.border_margin = 16;
  cfg.seed = seed;
  return cfg;
}

double MeanSobelMagnitude(const GrayImage& img) {
  double acc = 0.0;
  for (int y = 1; y + 1 < img.height; ++y) {
    for (int x = 1; x + 1 < img.width; ++x) {
      const double gx = (img.At(x + 1, y - 1) + 2.0 * img.At(x + 1, y) + img.At(x + 1, y + 1)) -
                        (img.At(x - 1, y - 1) + 2.0 * img.At(x - 1, y) + img.At(x - 1, y + 1));
      const double gy = (img.At(x - 1, y + 1) + 2.0 * img.At(x, y + 1) + img.At(x + 1, y + 1)) -
                        (img.At(x - 1, y - 1) + 2.0 * img.At(x, y - 1) + img.At(x + 1, y - 1));
      acc += std::hypot(gx, gy);
    }
  }
  return acc / ((img.width - 2) * (img.height - 2));
}

}  // namespace

TEST_CASE("gen config invariants") {
  GenConfig cfg = SmallGen();
  CHECK_NOTHROW(cfg.Validate());

  cfg.patch_size = 20;  // < 2 * rho
  CHECK_THROWS_AS(cfg.Validate(), Error);

  cfg = SmallGen();
  cfg.border_margin = 8;  // < rho
  CHECK_THROWS_AS(cfg.Validate(), Error);
}

TEST_CASE("zero perturbation yields bit-identical channels") {
  const GrayImage img = testsupport::MakeTerrainImage(128, 2);
  const PairSample s = MakePairSample(img, SmallGen(), Rect{20, 24, 64}, FourPointOffsets{});
  CHECK(s.warped_patch.data == s.source_patch.data);
  for (double d : s.target.d) CHECK(d == 0.0);
  for (int i = 0; i < 9; ++i) {
    CHECK(s.homography.h[i] == HomographyMatrix::Identity().h[i]);
  }
}

TEST_CASE("generated offsets stay within rho and crops respect the margin") {
  const GrayImage img = testsupport::MakeTerrainImage(160, 4);
  const GenConfig cfg = SmallGen(11);
  for (int i = 0; i < 1000; ++i) {
    Rng rng(Mix(cfg.seed, i));
    const PairSample s = GeneratePair(img, cfg, rng);
    for (double d : s.target.d) {
      CHECK(d >= -cfg.rho);
      CHECK(d <= cfg.rho);
    }
    CHECK(s.crop.x >= cfg.border_margin);
    CHECK(s.crop.y >= cfg.border_margin);
    CHECK(s.crop.x + s.crop.size + cfg.border_margin <= img.width);
    CHECK(s.crop.y + s.crop.size + cfg.border_margin <= img.height);
  }
}

TEST_CASE("pair generation rejects too-small images") {
  const GrayImage img = testsupport::MakeTerrainImage(90, 4);  // needs 96
  Rng rng(1);
  CHECK_THROWS_AS(GeneratePair(img, SmallGen(), rng), Error);
}

TEST_CASE("sample consistency oracle") {
  const GrayImage img = testsupport::MakeTerrainImage(160, 6);
  const GenConfig cfg = SmallGen(123);
  ImageSetSource source({img}, cfg, "terrain");

  for (uint64_t i = 0; i < 10; ++i) {
    const PairSample s = source.Sample(i);

    // Corner reprojection: H maps crop corners onto the perturbed corners.
    const CornerSet corners = PatchCorners(s.crop);
    for (int c = 0; c < 4; ++c) {
      const Point2 p = ProjectPoint(s.homography, corners.pts[c]);
      CHECK(std::abs(p.u - (corners.pts[c].u + s.target.d[2 * c])) < 1e-9);
      CHECK(std::abs(p.v - (corners.pts[c].v + s.target.d[2 * c + 1])) < 1e-9);
    }

    // The label reproduces the stored homography exactly.
    const HomographyMatrix rebuilt = OffsetsToHomography(corners, s.target);
    for (int k = 0; k < 9; ++k) CHECK(std::abs(rebuilt.h[k] - s.homography.h[k]) < 1e-9);

    // Independent route: warp the full image by H^{-1}, crop at p.
    const GrayImage warped_full = WarpByHomography(img, Invert(s.homography));
    const GrayImage via_warp = Crop(warped_full, s.crop);
    double max_diff = 0.0;
    for (size_t k = 0; k < via_warp.data.size(); ++k) {
      max_diff = std::max<double>(max_diff,
                                  std::abs(via_warp.data[k] - s.warped_patch.data[k]));
    }
    CHECK(max_diff < 1e-6);
  }
}

TEST_CASE("offset distribution matches Uniform(-rho, rho)") {
  const GrayImage img = testsupport::MakeTerrainImage(200, 8);
  GenConfig cfg;
  cfg.patch_size = 64;
  cfg.rho = 32.0;
  cfg.border_margin = 32;
  cfg.seed = 99;
  ImageSetSource source({img}, cfg, "terrain");

  double abs_acc = 0.0, acc = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const PairSample s = source.Sample(static_cast<uint64_t>(i));
    for (double d : s.target.d) {
      abs_acc += std::abs(d);
      acc += d;
    }
  }
  const double mean_abs = abs_acc / (8.0 * n);
  const double mean = acc / (8.0 * n);
  CHECK(std::abs(mean_abs - 16.0) < 0.3);  // E|U(-32,32)| = 16
  CHECK(std::abs(mean) < 0.5);
}

TEST_CASE("streams are deterministic under a fixed seed") {
  const GrayImage img = testsupport::MakeTerrainImage(160, 10);
  const GenConfig cfg = SmallGen(77);
  ImageSetSource a({img}, cfg, "x");
  ImageSetSource b({img}, cfg, "x");
  for (uint64_t i = 0; i < 16; ++i) {
    const PairSample sa = a.Sample(i);
    const PairSample sb = b.Sample(i);
    CHECK(sa.source_patch.data == sb.source_patch.data);
    CHECK(sa.warped_patch.data == sb.warped_patch.data);
    CHECK(sa.target.d == sb.target.d);
    CHECK(sa.crop.x == sb.crop.x);
    CHECK(sa.crop.y == sb.crop.y);
  }

  GssSource g1(GssConfig{}, GenConfig{.patch_size = 128, .rho = 32, .border_margin = 32, .seed = 5});
  GssSource g2(GssConfig{}, GenConfig{.patch_size = 128, .rho = 32, .border_margin = 32, .seed = 5});
  const PairSample s1 = g1.Sample(3);
  const PairSample s2 = g2.Sample(3);
  CHECK(s1.source_patch.data == s2.source_patch.data);
  CHECK(s1.target.d == s2.target.d);
}

TEST_CASE("corpus loading: ordering, filtering, warnings") {
  TempDir tmp("homlab-corpus");
  // Two valid images with distinct constant values, written out of order.
  WritePgm(GrayImage(100, 100, 200.0f / 255.0f), tmp.path() / "b.pgm");
  WritePgm(GrayImage(100, 100, 50.0f / 255.0f), tmp.path() / "a.pgm");
  WritePgm(GrayImage(20, 20, 0.5f), tmp.path() / "small.pgm");  // too small
  {
    std::ofstream bad(tmp.path() / "corrupt.pgm", std::ios::binary);
    bad << "P5\n10 10\n255\nxx";  // truncated raster
  }
  {
    std::ofstream txt(tmp.path() / "notes.txt");
    txt << "not an image";
  }

  GenConfig cfg = SmallGen();
  std::vector<std::string> warnings;
  const auto images = LoadCorpusImages(tmp.path(), cfg, CorpusSplit::kAll, &warnings);
  REQUIRE(images.size() == 2);
  CHECK(images[0].At(0, 0) == doctest::Approx(50.0 / 255.0).epsilon(1e-6));  // a.pgm first
  CHECK(images[1].At(0, 0) == doctest::Approx(200.0 / 255.0).epsilon(1e-6));
  CHECK(warnings.size() == 2);  // small + corrupt

  // Only unusable files -> EmptyCorpus.
  TempDir tmp2("homlab-corpus");
  WritePgm(GrayImage(20, 20, 0.5f), tmp2.path() / "small.pgm");
  CHECK_THROWS_AS(LoadCorpusImages(tmp2.path(), cfg, CorpusSplit::kAll, &warnings), Error);
}

TEST_CASE("hash split partitions the corpus") {
  TempDir tmp("homlab-corpus");
  const int n = 12;
  for (int i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img_%02d.pgm", i);
    WritePgm(GrayImage(100, 100, (10.0f + i) / 255.0f), tmp.path() / name);
  }
  const GenConfig cfg = SmallGen();
  const auto train = LoadCorpusImages(tmp.path(), cfg, CorpusSplit::kTrainHalf);
  const auto eval = LoadCorpusImages(tmp.path(), cfg, CorpusSplit::kEvalHalf);
  CHECK(train.size() + eval.size() == static_cast<size_t>(n));
  CHECK(!train.empty());
  CHECK(!eval.empty());

  std::set<int> train_vals, eval_vals;
  for (const auto& img : train) train_vals.insert(static_cast<int>(img.At(0, 0) * 255.0f + 0.5f));
  for (const auto& img : eval) eval_vals.insert(static_cast<int>(img.At(0, 0) * 255.0f + 0.5f));
  for (int v : train_vals) CHECK(eval_vals.count(v) == 0);
}

TEST_CASE("single-image corpus feeds every sample") {
  const GrayImage img = testsupport::MakeMosaicImage(160, 3);
  ImageSetSource source({img}, SmallGen(42), "solo");
  for (uint64_t i = 0; i < 8; ++i) {
    const PairSample s = source.Sample(i);
    const GrayImage direct = Crop(img, s.crop);
    CHECK(s.source_patch.data == direct.data);
  }
}

TEST_CASE("gss image generation") {
  GssConfig cfg;
  cfg.image_size = 96;
  cfg.seed = 0;

  SUBCASE("zero shapes gives a black image") {
    cfg.n_shapes = 0;
    Rng rng(1);
    const GrayImage img = GenerateGssImage(cfg, rng);
    for (float v : img.data) CHECK(v == 0.0f);
  }

  SUBCASE("single filled shape uses exactly the background and one level") {
    cfg.n_shapes = 1;
    cfg.intensity_levels = {0.5f};
    cfg.outline_probability = 0.0;
    cfg.size_min = 16;
    cfg.size_max = 32;
    Rng rng(7);
    const GrayImage img = GenerateGssImage(cfg, rng);
    std::set<float> values(img.data.begin(), img.data.end());
    CHECK(values == std::set<float>{0.0f, 0.5f});
  }

  SUBCASE("more shapes cover more pixels on average") {
    double mean_1 = 0.0, mean_15 = 0.0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
      for (int shapes : {1, 15}) {
        GssConfig c = cfg;
        c.n_shapes = shapes;
        Rng rng(Mix(1234, seed, shapes));
        const GrayImage img = GenerateGssImage(c, rng);
        int nonzero = 0;
        for (float v : img.data) nonzero += v > 0.0f ? 1 : 0;
        (shapes == 1 ? mean_1 : mean_15) += nonzero;
      }
    }
    CHECK(mean_15 / 100.0 > mean_1 / 100.0);
  }
}

TEST_CASE("gss shape replay matches image generation") {
  GssConfig gss;
  gss.image_size = 160;
  gss.n_shapes = 5;
  GenConfig gen = SmallGen(31);
  GssSource source(gss, gen);

  const std::vector<ShapeSpec> shapes = source.ShapesFor(4);
  GrayImage replay(gss.image_size, gss.image_size, 0.0f);
  for (const ShapeSpec& s : shapes) DrawShape(replay, s);

  Rng rng(Mix(gen.seed, 4));
  const GrayImage direct = GenerateGssImage(gss, rng);
  CHECK(replay.data == direct.data);
}

TEST_CASE("blur variant semantics") {
  const GrayImage img = testsupport::MakeTerrainImage(160, 13);
  const GenConfig cfg = SmallGen(55);

  SUBCASE("off is a pass-through") {
    ImageSetSource plain({img}, cfg, "x", false);
    ImageSetSource off({img}, cfg, "x", false);
    const PairSample a = plain.Sample(2);
    const PairSample b = off.Sample(2);
    CHECK(a.source_patch.data == b.source_patch.data);
    CHECK(a.warped_patch.data == b.warped_patch.data);
  }

  SUBCASE("constant images are blur-invariant") {
    const GrayImage constant(160, 160, 0.25f);
    ImageSetSource off({constant}, cfg, "c", false);
    ImageSetSource on({constant}, cfg, "c", true);
    CHECK(off.Sample(1).source_patch.data == on.Sample(1).source_patch.data);
    CHECK(off.Sample(1).warped_patch.data == on.Sample(1).warped_patch.data);
  }

  SUBCASE("blur lowers the gradient magnitude of GSS patches") {
    GssConfig gss;
    gss.image_size = 160;
    gss.n_shapes = 10;
    GssSource clean(gss, cfg, false);
    GssSource blurred(gss, cfg, true);
    double clean_mag = 0.0, blur_mag = 0.0;
    for (uint64_t i = 0; i < 10; ++i) {
      clean_mag += MeanSobelMagnitude(clean.Sample(i).source_patch);
      blur_mag += MeanSobelMagnitude(blurred.Sample(i).source_patch);
    }
    CHECK(blur_mag < clean_mag);
  }
}
