#include "datagen.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include "image_io.hpp"

namespace homlab {

namespace {

uint64_t Fnv1a(const std::string& s) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

void GenConfig::Validate() const {
  if (patch_size < 2 || rho <= 0.0 || border_margin < 0) {
    Fail(ErrorKind::kInvalidValue, "patch_size, rho and border_margin must be positive");
  }
  if (patch_size < 2.0 * rho) {
    Fail(ErrorKind::kInvalidValue, "patch_size must be >= 2*rho");
  }
  if (border_margin < rho) {
    Fail(ErrorKind::kInvalidValue, "border_margin must be >= rho");
  }
}

void GssConfig::Validate() const {
  if (image_size < 8) Fail(ErrorKind::kInvalidValue, "gss image_size too small");
  if (n_shapes < 0) Fail(ErrorKind::kInvalidValue, "gss n_shapes must be >= 0");
  if (size_min < 4.0 || size_max < size_min) {
    Fail(ErrorKind::kInvalidValue, "gss size range invalid (min >= 4, max >= min)");
  }
  if (intensity_levels.empty()) {
    Fail(ErrorKind::kInvalidValue, "gss intensity_levels must not be empty");
  }
  for (float v : intensity_levels) {
    if (!(v > 0.0f && v <= 1.0f)) {
      Fail(ErrorKind::kInvalidValue, "gss intensities must lie in (0, 1]");
    }
  }
  if (outline_probability < 0.0 || outline_probability > 1.0) {
    Fail(ErrorKind::kInvalidValue, "gss outline_probability must lie in [0, 1]");
  }
  if (outline_width < 1.0) {
    Fail(ErrorKind::kInvalidValue, "gss outline_width must be >= 1");
  }
}

PairSample MakePairSample(const GrayImage& img, const GenConfig& cfg, const Rect& crop,
                          const FourPointOffsets& delta) {
  PairSample s;
  s.crop = crop;
  s.target = delta;
  s.homography = OffsetsToHomography(PatchCorners(crop), delta);
  s.source_patch = Crop(img, crop);
  if (delta.AllZero()) {
    s.warped_patch = s.source_patch;
    return s;
  }

  // Direct form of warp-by-H^{-1}-then-crop: the output pixel at absolute
  // position q samples the source at H(q).
  GrayImage warped(cfg.patch_size, cfg.patch_size);
  for (int py = 0; py < cfg.patch_size; ++py) {
    float* row = warped.Row(py);
    for (int px = 0; px < cfg.patch_size; ++px) {
      const Point2 q{static_cast<double>(crop.x + px), static_cast<double>(crop.y + py)};
      const Point2 p = ProjectPoint(s.homography, q);
      row[px] = BilinearSample(img, p.u, p.v);
    }
  }
  s.warped_patch = std::move(warped);
  return s;
}

PairSample GeneratePair(const GrayImage& img, const GenConfig& cfg, Rng& rng) {
  cfg.Validate();
  const int needed = cfg.patch_size + 2 * cfg.border_margin;
  if (img.width < needed || img.height < needed) {
    Fail(ErrorKind::kImageTooSmall,
         "image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
             " smaller than patch + 2*margin = " + std::to_string(needed));
  }

  const int x = static_cast<int>(
      rng.UniformInt(cfg.border_margin, img.width - cfg.patch_size - cfg.border_margin));
  const int y = static_cast<int>(
      rng.UniformInt(cfg.border_margin, img.height - cfg.patch_size - cfg.border_margin));
  FourPointOffsets delta;
  for (int i = 0; i < 8; ++i) delta.d[i] = rng.Uniform(-cfg.rho, cfg.rho);
  return MakePairSample(img, cfg, Rect{x, y, cfg.patch_size}, delta);
}

std::vector<ShapeSpec> GenerateGssShapes(const GssConfig& cfg, Rng& rng) {
  cfg.Validate();
  std::vector<ShapeSpec> shapes;
  shapes.reserve(cfg.n_shapes);
  for (int i = 0; i < cfg.n_shapes; ++i) {
    ShapeSpec s;
    switch (rng.UniformInt(0, 2)) {
      case 0: s.kind = ShapeKind::kSquare; break;
      case 1: s.kind = ShapeKind::kTriangle; break;
      default: s.kind = ShapeKind::kCircle; break;
    }
    s.center = {rng.Uniform(0.0, cfg.image_size - 1.0), rng.Uniform(0.0, cfg.image_size - 1.0)};
    s.size = rng.Uniform(cfg.size_min, cfg.size_max);
    s.rotation = rng.Uniform(0.0, 6.283185307179586477);
    s.intensity =
        cfg.intensity_levels[rng.UniformInt(0, static_cast<int64_t>(cfg.intensity_levels.size()) - 1)];
    s.style = rng.Uniform() < cfg.outline_probability ? ShapeStyle::kOutlined : ShapeStyle::kFilled;
    s.outline_width = cfg.outline_width;
    shapes.push_back(s);
  }
  return shapes;
}

GrayImage GenerateGssImage(const GssConfig& cfg, Rng& rng) {
  const std::vector<ShapeSpec> shapes = GenerateGssShapes(cfg, rng);
  GrayImage img(cfg.image_size, cfg.image_size, 0.0f);
  for (const ShapeSpec& s : shapes) DrawShape(img, s);
  return img;
}

ImageSetSource::ImageSetSource(std::vector<GrayImage> images, GenConfig cfg, std::string label,
                               bool blur_sources)
    : images_(std::move(images)), cfg_(cfg), label_(std::move(label)) {
  cfg_.Validate();
  if (images_.empty()) Fail(ErrorKind::kEmptyCorpus, "no images in source '" + label_ + "'");
  if (blur_sources) {
    for (GrayImage& img : images_) img = GaussianBlur3x3(img);
  }
}

PairSample ImageSetSource::Sample(uint64_t index) const {
  Rng rng(Mix(cfg_.seed, index));
  const auto img_idx = rng.UniformInt(0, static_cast<int64_t>(images_.size()) - 1);
  return GeneratePair(images_[img_idx], cfg_, rng);
}

GssSource::GssSource(GssConfig gss, GenConfig cfg, bool blur_sources)
    : gss_(gss), cfg_(cfg), blur_(blur_sources) {
  gss_.Validate();
  cfg_.Validate();
  const int needed = cfg_.patch_size + 2 * cfg_.border_margin;
  if (gss_.image_size < needed) {
    Fail(ErrorKind::kImageTooSmall, "gss image_size smaller than patch + 2*margin");
  }
}

PairSample GssSource::Sample(uint64_t index) const {
  Rng rng(Mix(cfg_.seed, index));
  GrayImage img = GenerateGssImage(gss_, rng);
  if (blur_) img = GaussianBlur3x3(img);
  return GeneratePair(img, cfg_, rng);
}

std::vector<ShapeSpec> GssSource::ShapesFor(uint64_t index) const {
  Rng rng(Mix(cfg_.seed, index));
  return GenerateGssShapes(gss_, rng);
}

std::string GssSource::Label() const {
  return "gss" + std::to_string(gss_.n_shapes) + (blur_ ? "+blur" : "");
}

std::vector<GrayImage> LoadCorpusImages(const std::filesystem::path& dir, const GenConfig& cfg,
                                        CorpusSplit split, std::vector<std::string>* warnings) {
  cfg.Validate();
  if (!std::filesystem::is_directory(dir)) {
    Fail(ErrorKind::kEmptyCorpus, "corpus directory not found: " + dir.string());
  }

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) {
      return static_cast<char>(std::tolower(c));
    });
    if (ext == ".pgm" || ext == ".ppm" || ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename() < b.filename(); });

  const auto warn = [&](const std::string& msg) {
    if (warnings) {
      warnings->push_back(msg);
    } else {
      std::cerr << "warning: " << msg << "\n";
    }
  };

  const int needed = cfg.patch_size + 2 * cfg.border_margin;
  std::vector<GrayImage> images;
  for (const auto& path : files) {
    const std::string name = path.filename().string();
    if (split == CorpusSplit::kTrainHalf && (Fnv1a(name) & 1) != 0) continue;
    if (split == CorpusSplit::kEvalHalf && (Fnv1a(name) & 1) != 1) continue;
    GrayImage img;
    try {
      img = ReadImage(path);
    } catch (const Error& e) {
      warn("skipping unreadable image " + name + ": " + e.what());
      continue;
    }
    if (img.width < needed || img.height < needed) {
      warn("skipping too-small image " + name + " (" + std::to_string(img.width) + "x" +
           std::to_string(img.height) + " < " + std::to_string(needed) + ")");
      continue;
    }
    images.push_back(std::move(img));
  }
  if (images.empty()) {
    Fail(ErrorKind::kEmptyCorpus, "no usable images in " + dir.string());
  }
  return images;
}

std::unique_ptr<ImageSetSource> MakeCorpusSource(const std::filesystem::path& dir,
                                                 const GenConfig& cfg, CorpusSplit split,
                                                 bool blur_sources,
                                                 std::vector<std::string>* warnings) {
  return std::make_unique<ImageSetSource>(LoadCorpusImages(dir, cfg, split, warnings), cfg,
                                          dir.filename().string(), blur_sources);
}

}  // namespace homlab
