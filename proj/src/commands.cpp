#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>

#include "analysis.hpp"
#include "image_io.hpp"
#include "model_io.hpp"

namespace homlab {

namespace {

std::string HexHash(uint64_t h) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", static_cast<uint32_t>(h ^ (h >> 32)));
  return buf;
}

std::filesystem::path MakeRunDir(const RunConfig& cfg) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm_utc;
  gmtime_r(&t, &tm_utc);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%dT%H%M%SZ", &tm_utc);

  const std::filesystem::path base = cfg.OutDir();
  std::filesystem::create_directories(base);
  std::string name = std::string(stamp) + "-" + HexHash(cfg.Hash());
  std::filesystem::path dir = base / name;
  for (int suffix = 2; std::filesystem::exists(dir); ++suffix) {
    dir = base / (name + "-" + std::to_string(suffix));
  }
  std::filesystem::create_directories(dir);

  std::ofstream snap(dir / "config.snapshot");
  snap << cfg.Snapshot();
  return dir;
}

class Logger {
 public:
  explicit Logger(const std::filesystem::path& run_dir) : out_(run_dir / "log.txt") {}

  void Line(const std::string& msg) {
    std::cout << msg << "\n";
    out_ << msg << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

std::string FormatPath(int width, const char* pattern, int64_t value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, width, static_cast<long long>(value));
  return buf;
}

// Merges the (train or eval) split of every configured corpus directory.
std::vector<GrayImage> LoadConfiguredCorpora(const RunConfig& cfg, CorpusSplit split,
                                             std::vector<std::string>* warnings) {
  const auto dirs = cfg.CorpusDirs();
  if (dirs.empty()) {
    Fail(ErrorKind::kEmptyCorpus, "no corpus directory configured (set corpus=DIR)");
  }
  std::vector<GrayImage> images;
  for (const auto& dir : dirs) {
    auto part = LoadCorpusImages(dir, cfg.Gen(), split, warnings);
    for (auto& img : part) images.push_back(std::move(img));
  }
  return images;
}

HenModel<float> LoadConfiguredModel(const RunConfig& cfg) {
  if (cfg.WeightsPath().empty()) {
    Fail(ErrorKind::kInvalidValue, "this command requires weights=PATH");
  }
  return LoadWeights(cfg.WeightsPath(), cfg.Gen().patch_size, cfg.Train().loss_scale);
}

void DrawQuad(RgbImage& img, const CornerSet& corners, const FourPointOffsets& offsets,
              uint8_t r, uint8_t g, uint8_t b) {
  const auto plot = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    uint8_t* p = img.Pixel(x, y);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  };
  const auto line = [&](Point2 p0, Point2 p1) {
    // Bresenham over the clipped segment.
    int x0 = static_cast<int>(std::lround(p0.u)), y0 = static_cast<int>(std::lround(p0.v));
    const int x1 = static_cast<int>(std::lround(p1.u)), y1 = static_cast<int>(std::lround(p1.v));
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      plot(x0, y0);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  };
  for (int i = 0; i < 4; ++i) {
    const int j = (i + 1) % 4;
    line({corners.pts[i].u + offsets.d[2 * i], corners.pts[i].v + offsets.d[2 * i + 1]},
         {corners.pts[j].u + offsets.d[2 * j], corners.pts[j].v + offsets.d[2 * j + 1]});
  }
}

RgbImage CornerOverlay(const PairSample& sample, const std::array<double, 8>& predicted) {
  RgbImage img(sample.source_patch.width, sample.source_patch.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const uint8_t v = static_cast<uint8_t>(
          std::lround(std::clamp(sample.source_patch.At(x, y), 0.0f, 1.0f) * 255.0f));
      uint8_t* p = img.Pixel(x, y);
      p[0] = p[1] = p[2] = v;
    }
  }
  const Rect patch_rect{0, 0, sample.source_patch.width};
  const CornerSet corners = PatchCorners(patch_rect);
  DrawQuad(img, corners, sample.target, 40, 80, 255);  // ground truth: blue
  FourPointOffsets pred;
  for (int k = 0; k < 8; ++k) pred.d[k] = predicted[k];
  DrawQuad(img, corners, pred, 255, 60, 40);  // prediction: red
  return img;
}

}  // namespace

CommandResult CmdGssGen(const RunConfig& cfg) {
  cfg.Validate();
  const GssConfig gss = cfg.Gss();
  const int64_t count = cfg.GssCount();

  const auto dir = MakeRunDir(cfg);
  Logger log(dir);
  const auto out_dir = dir / "images";
  std::filesystem::create_directories(out_dir);

  std::ofstream manifest(dir / "manifest.csv");
  manifest << "filename,seed,n_shapes\n";
  for (int64_t i = 0; i < count; ++i) {
    const uint64_t image_seed = Mix(gss.seed, static_cast<uint64_t>(i));
    Rng rng(image_seed);
    const GrayImage img = GenerateGssImage(gss, rng);
    const std::string name = FormatPath(6, "gss_%0*lld.pgm", i);
    WritePgm(img, out_dir / name);
    manifest << name << "," << image_seed << "," << gss.n_shapes << "\n";
  }
  log.Line("gss-gen: wrote " + std::to_string(count) + " images to " + out_dir.string());
  return {dir};
}

CommandResult CmdPairsGen(const RunConfig& cfg) {
  cfg.Validate();
  std::vector<std::string> warnings;
  const auto images = LoadConfiguredCorpora(cfg, cfg.TrainSplit(), &warnings);
  const ImageSetSource source(images, cfg.Gen(), "corpus");

  const auto dir = MakeRunDir(cfg);
  Logger log(dir);
  for (const auto& w : warnings) log.Line("warning: " + w);
  const auto out_dir = dir / "pairs";
  std::filesystem::create_directories(out_dir);

  const int64_t n = cfg.Samples();
  for (int64_t i = 0; i < n; ++i) {
    const PairSample s = source.Sample(static_cast<uint64_t>(i));
    WritePgm(s.source_patch, out_dir / FormatPath(6, "sample_%0*lld_a.pgm", i));
    WritePgm(s.warped_patch, out_dir / FormatPath(6, "sample_%0*lld_b.pgm", i));
    std::ofstream txt(out_dir / FormatPath(6, "sample_%0*lld_offsets.txt", i));
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g %.9g %.9g %.9g", s.target.d[0],
                  s.target.d[1], s.target.d[2], s.target.d[3], s.target.d[4], s.target.d[5],
                  s.target.d[6], s.target.d[7]);
    txt << buf << "\n";
  }
  log.Line("pairs-gen: wrote " + std::to_string(n) + " samples to " + out_dir.string());
  return {dir};
}

CommandResult CmdTrain(const RunConfig& cfg) {
  cfg.Validate();
  const TrainConfig train_cfg = cfg.Train();

  // The corpus must load before any run-directory write.
  std::vector<std::string> warnings;
  const auto images = LoadConfiguredCorpora(cfg, cfg.TrainSplit(), &warnings);
  const ImageSetSource source(images, cfg.Gen(), "corpus");

  const auto dir = MakeRunDir(cfg);
  Logger log(dir);
  for (const auto& w : warnings) log.Line("warning: " + w);
  const auto weights_dir = dir / "weights";
  std::filesystem::create_directories(weights_dir);

  HenModel<float> model = HenModel<float>::RandomInit(
      HenLayout::Scaled(cfg.WidthScale()), cfg.Gen().patch_size, train_cfg.loss_scale,
      train_cfg.seed);
  ThreadPool pool(cfg.Threads());
  Trainer trainer(&model, &source, train_cfg, &pool);

  int64_t start_step = 0;
  if (!cfg.ResumePath().empty()) {
    const std::filesystem::path wpath = cfg.ResumePath();
    std::filesystem::path spath = wpath;
    spath.replace_extension(".state");
    model = LoadWeights(wpath, cfg.Gen().patch_size, train_cfg.loss_scale);
    Optimizer opt = Optimizer::LoadState(spath, train_cfg);
    start_step = opt.step_count();
    trainer.RestoreOptimizer(std::move(opt));
    log.Line("train: resumed from " + wpath.string() + " at step " +
             std::to_string(start_step));
  }

  log.Line("train: " + std::to_string(model.ParamCount()) + " parameters, " +
           std::to_string(images.size()) + " corpus images, " +
           std::to_string(train_cfg.total_steps) + " steps, batch " +
           std::to_string(train_cfg.batch_size) + ", threads " + std::to_string(pool.size()));

  std::ofstream loss_log(dir / "loss.csv");
  loss_log << "step,loss,lr,wall_ms\n";
  const auto t0 = std::chrono::steady_clock::now();
  const int64_t log_every = std::max<int64_t>(1, cfg.LogEvery());
  const int64_t ckpt_every = cfg.CheckpointEvery();

  for (int64_t step = start_step; step < train_cfg.total_steps; ++step) {
    const StepResult r = trainer.Step(step);
    if (step % log_every == 0 || step + 1 == train_cfg.total_steps) {
      const auto wall =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
              .count();
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%lld,%.8f,%.8g,%lld", static_cast<long long>(step),
                    r.loss, r.lr, static_cast<long long>(wall));
      loss_log << buf << "\n";
      loss_log.flush();
    }
    if (ckpt_every > 0 && (step + 1) % ckpt_every == 0 && step + 1 < train_cfg.total_steps) {
      const auto wbase = weights_dir / FormatPath(7, "step_%0*lld.weights", step + 1);
      SaveWeights(model, wbase);
      auto spath = wbase;
      spath.replace_extension(".state");
      trainer.optimizer().SaveState(spath);
    }
  }

  const auto final_weights = weights_dir / "final.weights";
  SaveWeights(model, final_weights);
  auto final_state = final_weights;
  final_state.replace_extension(".state");
  trainer.optimizer().SaveState(final_state);
  log.Line("train: final weights at " + final_weights.string());
  return {dir};
}

CommandResult CmdEval(const RunConfig& cfg) {
  cfg.Validate();
  const HenModel<float> model = LoadConfiguredModel(cfg);
  const auto dirs = cfg.CorpusDirs();
  if (dirs.empty()) {
    Fail(ErrorKind::kEmptyCorpus, "eval requires corpus=DIR (semicolon-separated list)");
  }

  ThreadPool pool(cfg.Threads());
  std::vector<std::string> warnings;
  std::vector<EvalReport> reports;
  for (const auto& cdir : dirs) {
    const auto source = MakeCorpusSource(cdir, cfg.Gen(), cfg.EvalSplit(), false, &warnings);
    EvalReport r = Evaluate(*source, cfg.Samples(), ModelPredictor(&model), "hen", pool);
    r.seed = cfg.Seed();
    reports.push_back(std::move(r));
  }

  const auto dir = MakeRunDir(cfg);
  Logger log(dir);
  for (const auto& w : warnings) log.Line("warning: " + w);
  std::filesystem::create_directories(dir / "tables");
  WriteCsvReport(dir / "tables" / "eval.csv", reports);
  for (const EvalReport& r : reports) log.Line("eval: " + CsvReportRow(r));
  return {dir};
}

CommandResult CmdBaseline(const RunConfig& cfg) {
  cfg.Validate();
  const auto dirs = cfg.CorpusDirs();
  if (dirs.empty()) {
    Fail(ErrorKind::kEmptyCorpus, "baseline requires corpus=DIR");
  }
  const BaselineConfig bcfg = cfg.Baseline();

  ThreadPool pool(cfg.Threads());
  std::vector<std::string> warnings;
  std::vector<EvalReport> reports;
  for (const auto& cdir : dirs) {
    const auto source = MakeCorpusSource(cdir, cfg.Gen(), cfg.EvalSplit(), false, &warnings);
    EvalReport r = Evaluate(*source, cfg.Samples(), BaselinePredictor(&bcfg), "fast-brief-ransac",
                            pool);
    r.seed = cfg.Seed();
    reports.push_back(std::move(r));
  }

  const auto dir = MakeRunDir(cfg);
  Logger log(dir);
  for (const auto& w : warnings) log.Line("warning: " + w);
  std::filesystem::create_directories(dir / "tables");
  WriteCsvReport(dir / "tables" / "baseline.csv", reports);
  for (const EvalReport& r : reports) log.Line("baseline: " + CsvReportRow(r));
  return {dir};
}

CommandResult CmdVisualize(const RunConfig& cfg) {
  cfg.Validate();
  const HenModel<float> model = LoadConfiguredModel(cfg);

  std::unique_ptr<PairSource> source;
  std::vector<std::string> warnings;
  if (cfg.VisualizeSource() == "corpus") {
    const auto dirs = cfg.CorpusDirs();
    if (dirs.empty()) Fail(ErrorKind::kEmptyCorpus, "visualize_source=corpus needs corpus=DIR");
    source = MakeCorpusSource(dirs[0], cfg.Gen(), cfg.EvalSplit(), false, &warnings);
  } else {
    source = std::make_unique<GssSource>(cfg.Gss(), cfg.Gen());
  }

  const auto dir = MakeRunDir(cfg);
  Logger log(dir);
  for (const auto& w : warnings) log.Line("warning: " + w);
  const auto img_dir = dir / "images";
  std::filesystem::create_directories(img_dir);

  const int64_t n = cfg.Samples();
  for (int64_t i = 0; i < n; ++i) {
    const PairSample sample = source->Sample(static_cast<uint64_t>(i));
    const FocusMap focus = ComputeFocusMaps(model, sample);
    WritePgm(FocusGrid(sample, focus, cfg.OverlayAlpha()),
             img_dir / FormatPath(4, "sample_%0*lld_focus.pgm", i));
    const std::vector<float> input = MakeModelInput(sample);
    const ForwardResult<float> fwd = model.Forward(input);
    WritePpm(CornerOverlay(sample, fwd.offsets_px),
             img_dir / FormatPath(4, "sample_%0*lld_corners.ppm", i));
  }
  log.Line("visualize: wrote " + std::to_string(n) + " focus grids and corner overlays to " +
           img_dir.string());
  return {dir};
}

CommandResult CmdExperiment(const RunConfig& cfg, const std::string& which) {
  cfg.Validate();
  ThreadPool pool(cfg.Threads());

  if (which == "domain") {
    const HenModel<float> model = LoadConfiguredModel(cfg);
    const auto dirs = cfg.CorpusDirs();
    if (dirs.empty()) Fail(ErrorKind::kEmptyCorpus, "experiment domain requires corpus dirs");
    std::vector<std::string> warnings;
    std::vector<EvalReport> reports;
    for (const auto& cdir : dirs) {
      const auto source = MakeCorpusSource(cdir, cfg.Gen(), cfg.EvalSplit(), false, &warnings);
      EvalReport r = Evaluate(*source, cfg.Samples(), ModelPredictor(&model), "hen", pool);
      r.seed = cfg.Seed();
      reports.push_back(std::move(r));
    }
    const auto dir = MakeRunDir(cfg);
    Logger log(dir);
    for (const auto& w : warnings) log.Line("warning: " + w);
    std::filesystem::create_directories(dir / "tables");
    WriteCsvReport(dir / "tables" / "domain.csv", reports);
    for (const EvalReport& r : reports) log.Line("domain: " + CsvReportRow(r));
    return {dir};
  }

  if (which == "shapes") {
    const HenModel<float> model = LoadConfiguredModel(cfg);
    const auto counts = cfg.ShapeCounts();
    std::vector<EvalReport> reports =
        RunShapeSweep(model, counts, cfg.Samples(), cfg.Gss(), cfg.Gen(), pool);
    for (auto& r : reports) r.seed = cfg.Seed();
    const auto dir = MakeRunDir(cfg);
    Logger log(dir);
    std::filesystem::create_directories(dir / "tables");
    WriteCsvReport(dir / "tables" / "shapes.csv", reports);
    for (const EvalReport& r : reports) log.Line("shapes: " + CsvReportRow(r));
    return {dir};
  }

  if (which == "blur") {
    const HenModel<float> model = LoadConfiguredModel(cfg);
    const auto dirs = cfg.CorpusDirs();
    if (dirs.empty()) Fail(ErrorKind::kEmptyCorpus, "experiment blur requires corpus dirs");
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, std::vector<GrayImage>>> corpora;
    for (const auto& cdir : dirs) {
      corpora.emplace_back(std::filesystem::path(cdir).filename().string(),
                           LoadCorpusImages(cdir, cfg.Gen(), cfg.EvalSplit(), &warnings));
    }
    std::vector<std::pair<std::string, const std::vector<GrayImage>*>> views;
    for (const auto& [label, images] : corpora) views.emplace_back(label, &images);
    const auto rows = RunBlurSweep(model, views, cfg.Gen(), cfg.Samples(), pool);

    std::vector<EvalReport> reports;
    for (const auto& row : rows) {
      reports.push_back(row.clean);
      reports.push_back(row.blurred);
    }
    for (auto& r : reports) r.seed = cfg.Seed();
    const auto dir = MakeRunDir(cfg);
    Logger log(dir);
    for (const auto& w : warnings) log.Line("warning: " + w);
    std::filesystem::create_directories(dir / "tables");
    WriteCsvReport(dir / "tables" / "blur.csv", reports);
    for (const EvalReport& r : reports) log.Line("blur: " + CsvReportRow(r));
    return {dir};
  }

  if (which == "selected2gap") {
    const HenModel<float> model = LoadConfiguredModel(cfg);
    const GssSource source(cfg.Gss(), cfg.Gen());
    std::vector<EvalReport> reports;
    reports.push_back(Evaluate(source, cfg.Samples(), ModelPredictor(&model), "normal2gap", pool));
    reports.push_back(Evaluate(source, cfg.Samples(),
                               Selected2GapPredictor(&model, cfg.KeepFraction()), "selected2gap",
                               pool));
    for (auto& r : reports) r.seed = cfg.Seed();
    const auto dir = MakeRunDir(cfg);
    Logger log(dir);
    std::filesystem::create_directories(dir / "tables");
    WriteCsvReport(dir / "tables" / "selected2gap.csv", reports);
    for (const EvalReport& r : reports) log.Line("selected2gap: " + CsvReportRow(r));
    return {dir};
  }

  Fail(ErrorKind::kInvalidValue,
       "unknown experiment '" + which + "' (domain, shapes, blur, selected2gap)");
}

}  // namespace homlab
