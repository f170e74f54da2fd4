#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "baseline.hpp"
#include "datagen.hpp"
#include "model.hpp"
#include "thread_pool.hpp"

namespace homlab {

struct EvalReport {
  std::string dataset;
  std::string model;
  int64_t n_samples = 0;
  double mae_px = 0.0;         // mean |pred - target| over the 8 components
  double corner_mae_px = 0.0;  // mean Euclidean corner error
  double failure_rate = 0.0;
  uint64_t seed = 0;
  std::vector<std::array<double, 8>> per_sample_abs_err;  // filled on request
};

struct Prediction {
  std::array<double, 8> offsets{};
  bool failed = false;
};

using Predictor = std::function<Prediction(const PairSample&)>;

// Componentwise mean absolute error, in pixels.
// Throws kEmptyInput-style kInvalidValue on empty or mismatched inputs.
double Mae(std::span<const std::array<double, 8>> predictions,
           std::span<const std::array<double, 8>> targets);

Predictor ZeroPredictor();
Predictor ModelPredictor(const HenModel<float>* model);
Predictor BaselinePredictor(const BaselineConfig* cfg);
Predictor Selected2GapPredictor(const HenModel<float>* model, double keep_fraction);

// Runs the predictor over samples 0..n-1 of the stream, in parallel, with a
// sample-order reduction. Deterministic for a fixed stream seed.
EvalReport Evaluate(const PairSource& source, int64_t n, const Predictor& predictor,
                    const std::string& model_label, ThreadPool& pool,
                    bool keep_per_sample = false);

// Per-channel heatmaps: pre-GAP feature maps, min-max normalized to [0, 1]
// (a flat channel maps to all zeros), bilinearly upsampled to the input
// resolution.
struct FocusMap {
  std::vector<GrayImage> channels;  // kHenOutputs maps
};

GrayImage MinMaxNormalize(const GrayImage& img);

// Center-aligned bilinear resize with edge clamping.
GrayImage UpsampleBilinear(const GrayImage& src, int out_w, int out_h);

FocusMap FocusMapsFromFeatures(const Tensor<float>& feature_maps, int out_size);
FocusMap ComputeFocusMaps(const HenModel<float>& model, const PairSample& sample);

// Pixelwise affine blend: (1 - alpha) * base + alpha * heat.
// Throws kShapeMismatch on dimension mismatch.
GrayImage OverlayHeat(const GrayImage& heat, const GrayImage& base, double alpha = 0.5);

// 10-tile strip: the two input patches followed by the 8 channel overlays.
GrayImage FocusGrid(const PairSample& sample, const FocusMap& focus, double alpha = 0.5);

// GAP over only the top keep_fraction of spatial positions per channel,
// ranked by the channel's own activation. keep_fraction = 1 reproduces the
// standard forward output bit-for-bit.
Prediction Selected2GapPredict(const HenModel<float>& model, const PairSample& sample,
                               double keep_fraction);

// Square binary dilation with Chebyshev radius r.
GrayImage DilateBinary(const GrayImage& mask, int radius);

// Boundary/background masks of the source patch of a GSS sample, built from
// the generating shape list: boundary = shape outlines dilated by
// dilate_radius; background = pixels covered by no shape and not in the
// dilated boundary.
struct GssMasks {
  GrayImage boundary;
  GrayImage background;
  int boundary_count = 0;
  int background_count = 0;
};

GssMasks ComputeGssMasks(const GssSource& source, uint64_t index, const Rect& crop,
                         int dilate_radius = 3);

struct FocusEdgeStats {
  int samples = 0;                        // samples with usable masks
  int samples_passing = 0;                // >= 5 of 8 channels edge > background
  int skipped = 0;                        // patches without both mask kinds
  std::array<int, kHenOutputs> channel_wins{};
};

// Evaluates the edge-affinity statistic over the first n usable samples of
// a GSS stream: per channel, mean focus on the dilated boundary mask vs
// mean focus on the background mask.
FocusEdgeStats ComputeFocusEdgeAffinity(const HenModel<float>& model, const GssSource& source,
                                        int n, int dilate_radius = 3);

// GSS accuracy as a function of shape count; one report per count.
std::vector<EvalReport> RunShapeSweep(const HenModel<float>& model,
                                      std::span<const int> shape_counts, int64_t samples_per,
                                      const GssConfig& gss_base, const GenConfig& gen,
                                      ThreadPool& pool);

struct BlurSweepRow {
  EvalReport clean;
  EvalReport blurred;
};

// Paired clean/blurred evaluation per corpus; blur applies to the source
// images before pair generation.
std::vector<BlurSweepRow> RunBlurSweep(const HenModel<float>& model,
                                       std::span<const std::pair<std::string,
                                                                 const std::vector<GrayImage>*>>
                                           corpora,
                                       const GenConfig& gen, int64_t samples_per,
                                       ThreadPool& pool);

// CSV emission: header "name,n,mae_px,corner_mae_px,failure_rate,seed",
// one row per report, name = model/dataset.
void WriteCsvReport(const std::filesystem::path& path, std::span<const EvalReport> reports);
std::string CsvReportHeader();
std::string CsvReportRow(const EvalReport& r);

}  // namespace homlab
