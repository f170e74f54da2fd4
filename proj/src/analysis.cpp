#include "analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace homlab {

double Mae(std::span<const std::array<double, 8>> predictions,
           std::span<const std::array<double, 8>> targets) {
  if (predictions.empty() || predictions.size() != targets.size()) {
    Fail(ErrorKind::kInvalidValue, "MAE requires equal, nonempty prediction/target lists");
  }
  double acc = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    for (int k = 0; k < 8; ++k) acc += std::abs(predictions[i][k] - targets[i][k]);
  }
  return acc / (static_cast<double>(predictions.size()) * 8.0);
}

Predictor ZeroPredictor() {
  return [](const PairSample&) { return Prediction{}; };
}

Predictor ModelPredictor(const HenModel<float>* model) {
  return [model](const PairSample& sample) {
    const std::vector<float> input = MakeModelInput(sample);
    const ForwardResult<float> fwd = model->Forward(input);
    Prediction p;
    p.offsets = fwd.offsets_px;
    return p;
  };
}

Predictor BaselinePredictor(const BaselineConfig* cfg) {
  return [cfg](const PairSample& sample) {
    const BaselineEstimate est = EstimatePairClassic(sample, *cfg);
    Prediction p;
    for (int k = 0; k < 8; ++k) p.offsets[k] = est.offsets.d[k];
    p.failed = est.failed;
    return p;
  };
}

Predictor Selected2GapPredictor(const HenModel<float>* model, double keep_fraction) {
  return [model, keep_fraction](const PairSample& sample) {
    return Selected2GapPredict(*model, sample, keep_fraction);
  };
}

EvalReport Evaluate(const PairSource& source, int64_t n, const Predictor& predictor,
                    const std::string& model_label, ThreadPool& pool, bool keep_per_sample) {
  if (n < 1) Fail(ErrorKind::kInvalidValue, "evaluation requires n >= 1");

  struct Row {
    std::array<double, 8> abs_err;
    double corner_err;
    bool failed;
  };
  std::vector<Row> rows(static_cast<size_t>(n));

  pool.ParallelFor(n, [&](int64_t i, int) {
    const PairSample sample = source.Sample(static_cast<uint64_t>(i));
    const Prediction pred = predictor(sample);
    Row& row = rows[static_cast<size_t>(i)];
    row.failed = pred.failed;
    double corner = 0.0;
    for (int c = 0; c < 4; ++c) {
      const double du = pred.offsets[2 * c] - sample.target.d[2 * c];
      const double dv = pred.offsets[2 * c + 1] - sample.target.d[2 * c + 1];
      row.abs_err[2 * c] = std::abs(du);
      row.abs_err[2 * c + 1] = std::abs(dv);
      corner += std::hypot(du, dv);
    }
    row.corner_err = corner / 4.0;
  });

  EvalReport report;
  report.dataset = source.Label();
  report.model = model_label;
  report.n_samples = n;
  double mae_acc = 0.0, corner_acc = 0.0;
  int64_t failures = 0;
  for (const Row& row : rows) {
    for (int k = 0; k < 8; ++k) mae_acc += row.abs_err[k];
    corner_acc += row.corner_err;
    failures += row.failed ? 1 : 0;
  }
  report.mae_px = mae_acc / (static_cast<double>(n) * 8.0);
  report.corner_mae_px = corner_acc / static_cast<double>(n);
  report.failure_rate = static_cast<double>(failures) / static_cast<double>(n);
  if (keep_per_sample) {
    report.per_sample_abs_err.reserve(rows.size());
    for (const Row& row : rows) report.per_sample_abs_err.push_back(row.abs_err);
  }
  return report;
}

GrayImage MinMaxNormalize(const GrayImage& img) {
  const auto [mn_it, mx_it] = std::minmax_element(img.data.begin(), img.data.end());
  const float mn = *mn_it, mx = *mx_it;
  GrayImage out(img.width, img.height);
  if (mx - mn <= 0.0f) return out;  // degenerate range renders as "no focus"
  const float inv = 1.0f / (mx - mn);
  for (size_t i = 0; i < img.data.size(); ++i) out.data[i] = (img.data[i] - mn) * inv;
  return out;
}

GrayImage UpsampleBilinear(const GrayImage& src, int out_w, int out_h) {
  GrayImage out(out_w, out_h);
  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double v = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    for (int x = 0; x < out_w; ++x) {
      const double u = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      out.At(x, y) = BilinearSample(src, u, v);
    }
  }
  return out;
}

FocusMap FocusMapsFromFeatures(const Tensor<float>& feature_maps, int out_size) {
  const int channels = feature_maps.shape[0];
  const int h = feature_maps.shape[1];
  const int w = feature_maps.shape[2];
  FocusMap focus;
  focus.channels.reserve(channels);
  for (int c = 0; c < channels; ++c) {
    GrayImage ch(w, h);
    std::copy(feature_maps.data.begin() + static_cast<ptrdiff_t>(c) * h * w,
              feature_maps.data.begin() + static_cast<ptrdiff_t>(c + 1) * h * w,
              ch.data.begin());
    focus.channels.push_back(UpsampleBilinear(MinMaxNormalize(ch), out_size, out_size));
  }
  return focus;
}

FocusMap ComputeFocusMaps(const HenModel<float>& model, const PairSample& sample) {
  const std::vector<float> input = MakeModelInput(sample);
  const ForwardResult<float> fwd = model.Forward(input);
  return FocusMapsFromFeatures(fwd.feature_maps, sample.source_patch.width);
}

GrayImage OverlayHeat(const GrayImage& heat, const GrayImage& base, double alpha) {
  if (!heat.SameSize(base)) {
    Fail(ErrorKind::kShapeMismatch, "overlay requires matching dimensions");
  }
  GrayImage out(base.width, base.height);
  const float a = static_cast<float>(alpha);
  for (size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = (1.0f - a) * base.data[i] + a * heat.data[i];
  }
  return out;
}

GrayImage FocusGrid(const PairSample& sample, const FocusMap& focus, double alpha) {
  const int tile = sample.source_patch.width;
  const int gap = 2;
  const int tiles = 2 + static_cast<int>(focus.channels.size());
  GrayImage grid(tiles * tile + (tiles - 1) * gap, tile, 1.0f);

  const auto blit = [&](const GrayImage& img, int index) {
    const int x0 = index * (tile + gap);
    for (int y = 0; y < tile; ++y) {
      std::copy(img.Row(y), img.Row(y) + tile, grid.Row(y) + x0);
    }
  };
  blit(sample.source_patch, 0);
  blit(sample.warped_patch, 1);
  for (size_t c = 0; c < focus.channels.size(); ++c) {
    blit(OverlayHeat(focus.channels[c], sample.source_patch, alpha), 2 + static_cast<int>(c));
  }
  return grid;
}

Prediction Selected2GapPredict(const HenModel<float>& model, const PairSample& sample,
                               double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    Fail(ErrorKind::kInvalidValue, "keep_fraction must lie in (0, 1]");
  }
  const std::vector<float> input = MakeModelInput(sample);
  const ForwardResult<float> fwd = model.Forward(input);
  Prediction p;
  if (keep_fraction == 1.0) {
    p.offsets = fwd.offsets_px;  // bit-identical to the standard path
    return p;
  }

  const int channels = fwd.feature_maps.shape[0];
  const int64_t hw =
      static_cast<int64_t>(fwd.feature_maps.shape[1]) * fwd.feature_maps.shape[2];
  const int64_t k = std::max<int64_t>(
      1, static_cast<int64_t>(std::ceil(keep_fraction * static_cast<double>(hw))));

  std::vector<int> order(static_cast<size_t>(hw));
  for (int c = 0; c < channels; ++c) {
    const float* ch = fwd.feature_maps.data.data() + static_cast<ptrdiff_t>(c) * hw;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [ch](int a, int b) { return ch[a] > ch[b]; });
    // Sum the selected positions in spatial order for a deterministic,
    // order-independent reduction.
    std::vector<int> selected(order.begin(), order.begin() + k);
    std::sort(selected.begin(), selected.end());
    double acc = 0.0;
    for (int idx : selected) acc += ch[idx];
    p.offsets[c] = acc / static_cast<double>(k) * model.loss_scale();
  }
  return p;
}

GrayImage DilateBinary(const GrayImage& mask, int radius) {
  GrayImage out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.At(x, y) <= 0.5f) continue;
      const int x0 = std::max(0, x - radius), x1 = std::min(mask.width - 1, x + radius);
      const int y0 = std::max(0, y - radius), y1 = std::min(mask.height - 1, y + radius);
      for (int yy = y0; yy <= y1; ++yy) {
        for (int xx = x0; xx <= x1; ++xx) out.At(xx, yy) = 1.0f;
      }
    }
  }
  return out;
}

GssMasks ComputeGssMasks(const GssSource& source, uint64_t index, const Rect& crop,
                         int dilate_radius) {
  const std::vector<ShapeSpec> shapes = source.ShapesFor(index);
  // Masks are built at full image resolution, then cropped to the patch.
  const int image_size = source.gss_config().image_size;

  GrayImage outline(image_size, image_size);
  GrayImage coverage(image_size, image_size);
  for (const ShapeSpec& s : shapes) {
    DrawShapeMask(outline, s, /*boundary_only=*/true);
    DrawShapeMask(coverage, s, /*boundary_only=*/false);
  }
  const GrayImage boundary_full = DilateBinary(outline, dilate_radius);

  GssMasks masks;
  masks.boundary = Crop(boundary_full, crop);
  masks.background = GrayImage(crop.size, crop.size);
  const GrayImage coverage_patch = Crop(coverage, crop);
  for (int i = 0; i < crop.size * crop.size; ++i) {
    const bool on_boundary = masks.boundary.data[i] > 0.5f;
    const bool covered = coverage_patch.data[i] > 0.5f;
    masks.background.data[i] = (!on_boundary && !covered) ? 1.0f : 0.0f;
    masks.boundary_count += on_boundary ? 1 : 0;
    masks.background_count += masks.background.data[i] > 0.5f ? 1 : 0;
  }
  return masks;
}

FocusEdgeStats ComputeFocusEdgeAffinity(const HenModel<float>& model, const GssSource& source,
                                        int n, int dilate_radius) {
  FocusEdgeStats stats;
  uint64_t index = 0;
  while (stats.samples < n) {
    const PairSample sample = source.Sample(index);
    const GssMasks masks = ComputeGssMasks(source, index, sample.crop, dilate_radius);
    ++index;
    if (masks.boundary_count == 0 || masks.background_count == 0) {
      ++stats.skipped;
      continue;
    }
    const FocusMap focus = ComputeFocusMaps(model, sample);
    int wins = 0;
    for (size_t c = 0; c < focus.channels.size(); ++c) {
      double edge_sum = 0.0, bg_sum = 0.0;
      const GrayImage& ch = focus.channels[c];
      for (size_t i = 0; i < ch.data.size(); ++i) {
        if (masks.boundary.data[i] > 0.5f) edge_sum += ch.data[i];
        if (masks.background.data[i] > 0.5f) bg_sum += ch.data[i];
      }
      const double edge_mean = edge_sum / masks.boundary_count;
      const double bg_mean = bg_sum / masks.background_count;
      if (edge_mean > bg_mean) {
        ++wins;
        ++stats.channel_wins[c];
      }
    }
    ++stats.samples;
    if (wins >= 5) ++stats.samples_passing;
  }
  return stats;
}

std::vector<EvalReport> RunShapeSweep(const HenModel<float>& model,
                                      std::span<const int> shape_counts, int64_t samples_per,
                                      const GssConfig& gss_base, const GenConfig& gen,
                                      ThreadPool& pool) {
  std::vector<EvalReport> reports;
  for (int count : shape_counts) {
    GssConfig gss = gss_base;
    gss.n_shapes = count;
    const GssSource source(gss, gen);
    reports.push_back(Evaluate(source, samples_per, ModelPredictor(&model), "hen", pool));
  }
  return reports;
}

std::vector<BlurSweepRow> RunBlurSweep(
    const HenModel<float>& model,
    std::span<const std::pair<std::string, const std::vector<GrayImage>*>> corpora,
    const GenConfig& gen, int64_t samples_per, ThreadPool& pool) {
  std::vector<BlurSweepRow> rows;
  for (const auto& [label, images] : corpora) {
    BlurSweepRow row;
    const ImageSetSource clean(*images, gen, label, /*blur_sources=*/false);
    const ImageSetSource blurred(*images, gen, label + "+blur", /*blur_sources=*/true);
    row.clean = Evaluate(clean, samples_per, ModelPredictor(&model), "hen", pool);
    row.blurred = Evaluate(blurred, samples_per, ModelPredictor(&model), "hen", pool);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string CsvReportHeader() { return "name,n,mae_px,corner_mae_px,failure_rate,seed"; }

std::string CsvReportRow(const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s/%s,%lld,%.6f,%.6f,%.6f,%llu", r.model.c_str(),
                r.dataset.c_str(), static_cast<long long>(r.n_samples), r.mae_px,
                r.corner_mae_px, r.failure_rate, static_cast<unsigned long long>(r.seed));
  return std::string(buf);
}

void WriteCsvReport(const std::filesystem::path& path, std::span<const EvalReport> reports) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kIo, "cannot create " + path.string());
  out << CsvReportHeader() << "\n";
  for (const EvalReport& r : reports) out << CsvReportRow(r) << "\n";
  if (!out) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

}  // namespace homlab
