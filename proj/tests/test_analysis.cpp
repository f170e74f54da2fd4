#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "analysis.hpp"
#include "support/corpora.hpp"

using namespace homlab;

namespace {

HenModel<float> SmallModel(uint64_t seed) {
  return HenModel<float>::RandomInit(HenLayout::Scaled(0.25), 32, 8.0, seed);
}

PairSample SmallSample(uint64_t seed) {
  const GrayImage img = testsupport::MakeTerrainImage(96, seed);
  GenConfig cfg;
  cfg.patch_size = 32;
  cfg.rho = 8;
  cfg.border_margin = 8;
  cfg.seed = seed;
  Rng rng(Mix(seed, 1));
  return GeneratePair(img, cfg, rng);
}

}  // namespace

TEST_CASE("mae arithmetic") {
  std::vector<std::array<double, 8>> preds, targets;
  preds.push_back({1, -1, 2, -2, 3, -3, 4, -4});
  targets.push_back({0, 0, 0, 0, 0, 0, 0, 0});
  CHECK(Mae(preds, targets) == doctest::Approx(2.5));

  targets = preds;
  CHECK(Mae(preds, targets) == 0.0);

  std::vector<std::array<double, 8>> empty;
  CHECK_THROWS_AS(Mae(empty, empty), Error);
}

TEST_CASE("zero predictor sits at the analytic floor") {
  const GrayImage img = testsupport::MakeTerrainImage(200, 3);
  GenConfig cfg;
  cfg.patch_size = 64;
  cfg.rho = 32;
  cfg.border_margin = 32;
  cfg.seed = 11;
  ImageSetSource source({img}, cfg, "terrain");
  ThreadPool pool(2);
  const EvalReport report = Evaluate(source, 2000, ZeroPredictor(), "zero", pool);
  CHECK(std::abs(report.mae_px - 16.0) < 0.5);  // E|U(-32,32)| = 16
  CHECK(report.failure_rate == 0.0);
}

TEST_CASE("evaluation is deterministic and order-independent") {
  const auto model = SmallModel(5);
  const GrayImage img = testsupport::MakeTerrainImage(96, 7);
  GenConfig cfg;
  cfg.patch_size = 32;
  cfg.rho = 8;
  cfg.border_margin = 8;
  cfg.seed = 3;
  ImageSetSource source({img}, cfg, "t");

  ThreadPool pool1(1), pool2(2);
  const EvalReport a = Evaluate(source, 64, ModelPredictor(&model), "hen", pool1);
  const EvalReport b = Evaluate(source, 64, ModelPredictor(&model), "hen", pool2);
  CHECK(a.mae_px == b.mae_px);
  CHECK(a.corner_mae_px == b.corner_mae_px);
}

TEST_CASE("focus maps: GAP identity and degenerate channels") {
  const auto model = SmallModel(9);
  const PairSample sample = SmallSample(13);
  const std::vector<float> input = MakeModelInput(sample);
  const ForwardResult<float> fwd = model.Forward(input);

  // Each channel's raw spatial mean is exactly the model's raw output.
  const int hw = fwd.feature_maps.shape[1] * fwd.feature_maps.shape[2];
  for (int c = 0; c < 8; ++c) {
    const float mean = ChannelMean(fwd.feature_maps.data.data() + c * hw, hw);
    CHECK(mean == fwd.gap[c]);
  }

  // A flat channel normalizes to all zeros.
  Tensor<float> flat({2, 3, 3});
  std::fill(flat.data.begin(), flat.data.begin() + 9, 0.7f);
  for (int i = 9; i < 18; ++i) flat.data[i] = static_cast<float>(i);
  const FocusMap maps = FocusMapsFromFeatures(flat, 12);
  for (float v : maps.channels[0].data) CHECK(v == 0.0f);
  for (float v : maps.channels[1].data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("upsampling preserves a single peak within a pixel") {
  Tensor<float> feat({1, 4, 4});
  feat.data[1 * 4 + 2] = 1.0f;  // peak at (x=2, y=1)
  const FocusMap maps = FocusMapsFromFeatures(feat, 64);
  const GrayImage& ch = maps.channels[0];
  int best = 0;
  for (size_t i = 1; i < ch.data.size(); ++i) {
    if (ch.data[i] > ch.data[best]) best = static_cast<int>(i);
  }
  const double bx = best % 64, by = best / 64;
  // Source cell (2, 1) maps to output coordinates (39.5, 23.5).
  CHECK(std::abs(bx - 39.5) <= 1.0);
  CHECK(std::abs(by - 23.5) <= 1.0);
}

TEST_CASE("overlay blending") {
  const GrayImage base = testsupport::MakeTerrainImage(32, 15);
  GrayImage heat(32, 32, 0.0f);
  for (int i = 0; i < 32 * 32; ++i) heat.data[i] = (i % 7) / 7.0f;

  const GrayImage zero = OverlayHeat(heat, base, 0.0);
  CHECK(zero.data == base.data);

  const GrayImage one = OverlayHeat(heat, base, 1.0);
  CHECK(one.data == heat.data);

  const GrayImage half = OverlayHeat(heat, base, 0.5);
  for (size_t i = 0; i < half.data.size(); ++i) {
    CHECK(half.data[i] == doctest::Approx(0.5f * base.data[i] + 0.5f * heat.data[i]).epsilon(1e-6));
  }

  const GrayImage small(8, 8, 0.0f);
  CHECK_THROWS_AS(OverlayHeat(small, base, 0.5), Error);
}

TEST_CASE("focus grid lays out ten tiles") {
  const auto model = SmallModel(17);
  const PairSample sample = SmallSample(19);
  const FocusMap focus = ComputeFocusMaps(model, sample);
  REQUIRE(focus.channels.size() == 8);
  const GrayImage grid = FocusGrid(sample, focus, 0.5);
  CHECK(grid.height == 32);
  CHECK(grid.width == 10 * 32 + 9 * 2);
  // First tile is the source patch.
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      CHECK(grid.At(x, y) == sample.source_patch.At(x, y));
    }
  }
}

TEST_CASE("selected2gap with keep_fraction 1 is bit-identical") {
  const auto model = SmallModel(21);
  const PairSample sample = SmallSample(23);
  const std::vector<float> input = MakeModelInput(sample);
  const ForwardResult<float> fwd = model.Forward(input);
  const Prediction sel = Selected2GapPredict(model, sample, 1.0);
  CHECK(std::memcmp(sel.offsets.data(), fwd.offsets_px.data(), sizeof(sel.offsets)) == 0);
}

TEST_CASE("selected2gap truncates the lowest positions") {
  // Hand-built check of the selection rule on a known feature map.
  Tensor<float> feat({1, 2, 2});
  feat.data = {4.0f, -8.0f, 2.0f, 0.0f};
  // keep 0.8 -> ceil(0.8 * 4) = 4 positions? no: 3.2 -> 4? ceil gives 4.
  // Use keep 0.5 -> 2 positions: {4, 2} -> mean 3.
  const int64_t hw = 4;
  const int64_t k = static_cast<int64_t>(std::ceil(0.5 * hw));
  CHECK(k == 2);
  // The public surface is exercised through the model path; here the rule
  // itself is verified against a direct computation.
  std::vector<float> sorted(feat.data.begin(), feat.data.end());
  std::sort(sorted.rbegin(), sorted.rend());
  double acc = 0.0;
  for (int64_t i = 0; i < k; ++i) acc += sorted[i];
  CHECK(acc / k == doctest::Approx(3.0));
}

TEST_CASE("selected2gap evaluation stays finite and defined") {
  const auto model = SmallModel(25);
  GssConfig gss;
  gss.image_size = 96;
  gss.n_shapes = 6;
  gss.size_min = 6;
  gss.size_max = 24;
  GenConfig gen;
  gen.patch_size = 32;
  gen.rho = 8;
  gen.border_margin = 8;
  gen.seed = 29;
  GssSource source(gss, gen);
  ThreadPool pool(2);
  const EvalReport normal = Evaluate(source, 32, ModelPredictor(&model), "n", pool);
  const EvalReport selected = Evaluate(source, 32, Selected2GapPredictor(&model, 0.8), "s", pool);
  CHECK(std::isfinite(normal.mae_px));
  CHECK(std::isfinite(selected.mae_px));

  CHECK_THROWS_AS(Selected2GapPredict(model, SmallSample(31), 0.0), Error);
}

TEST_CASE("binary dilation grows a point into a clipped square") {
  GrayImage mask(16, 16, 0.0f);
  mask.At(1, 1) = 1.0f;
  const GrayImage grown = DilateBinary(mask, 3);
  int count = 0;
  for (float v : grown.data) count += v > 0.5f ? 1 : 0;
  CHECK(count == 5 * 5);  // clipped at the top-left border
}

TEST_CASE("gss masks separate boundary from background") {
  GssConfig gss;
  gss.image_size = 96;
  gss.n_shapes = 3;
  gss.size_min = 12;
  gss.size_max = 28;
  GenConfig gen;
  gen.patch_size = 32;
  gen.rho = 8;
  gen.border_margin = 8;
  gen.seed = 37;
  GssSource source(gss, gen);

  int usable = 0;
  for (uint64_t i = 0; i < 20 && usable < 5; ++i) {
    const PairSample s = source.Sample(i);
    const GssMasks masks = ComputeGssMasks(source, i, s.crop, 3);
    if (masks.boundary_count == 0 || masks.background_count == 0) continue;
    ++usable;
    for (size_t p = 0; p < masks.boundary.data.size(); ++p) {
      CHECK(!(masks.boundary.data[p] > 0.5f && masks.background.data[p] > 0.5f));
    }
  }
  CHECK(usable >= 5);
}

TEST_CASE("csv report schema") {
  CHECK(CsvReportHeader() == std::string("name,n,mae_px,corner_mae_px,failure_rate,seed"));
  EvalReport r;
  r.dataset = "gss9";
  r.model = "hen";
  r.n_samples = 128;
  r.mae_px = 3.25;
  r.corner_mae_px = 4.5;
  r.failure_rate = 0.0625;
  r.seed = 7;
  CHECK(CsvReportRow(r) == std::string("hen/gss9,128,3.250000,4.500000,0.062500,7"));
}

TEST_CASE("shape sweep emits one report per count") {
  const auto model = SmallModel(33);
  GssConfig gss;
  gss.image_size = 96;
  gss.size_min = 6;
  gss.size_max = 24;
  GenConfig gen;
  gen.patch_size = 32;
  gen.rho = 8;
  gen.border_margin = 8;
  gen.seed = 39;
  ThreadPool pool(2);
  const std::vector<int> counts{1, 5};
  const auto reports = RunShapeSweep(model, counts, 16, gss, gen, pool);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].dataset == "gss1");
  CHECK(reports[1].dataset == "gss5");
}

TEST_CASE("blur sweep pairs clean and blurred reports per corpus") {
  const auto model = SmallModel(35);
  const auto images = testsupport::MakeCorpus(testsupport::Domain::kWaves, 2, 96, 41);
  GenConfig gen;
  gen.patch_size = 32;
  gen.rho = 8;
  gen.border_margin = 8;
  gen.seed = 43;
  ThreadPool pool(2);
  const std::vector<std::pair<std::string, const std::vector<GrayImage>*>> corpora{
      {"waves", &images}};
  const auto rows = RunBlurSweep(model, corpora, gen, 16, pool);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].clean.dataset == "waves");
  CHECK(rows[0].blurred.dataset == "waves+blur");
  CHECK(std::isfinite(rows[0].clean.mae_px));
  CHECK(std::isfinite(rows[0].blurred.mae_px));
}
