#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "image.hpp"
#include "rng.hpp"
#include "shapes.hpp"

namespace homlab {

// Pair-generation settings. border_margin defaults to rho, the minimal
// margin that keeps the perturbed quadrilateral inside the source image.
struct GenConfig {
  int patch_size = 128;
  double rho = 32.0;
  int border_margin = 32;
  uint64_t seed = 0;

  // Throws kInvalidValue unless patch_size >= 2 rho and border_margin >= rho.
  void Validate() const;
};

// One supervised example: the stacked patch pair, the ground-truth corner
// offsets and the generation metadata.
struct PairSample {
  GrayImage source_patch;   // I_s
  GrayImage warped_patch;   // I_d
  FourPointOffsets target;  // the drawn corner perturbations, in pixels
  Rect crop;                // position p in the source image
  HomographyMatrix homography;  // maps crop corners to perturbed corners
};

// Deterministic core of pair generation for a chosen crop and offsets:
// resamples the source under the offset-defined homography so the
// perturbed-quad content lands on the crop window (equivalent to warping
// the full image by H^{-1} and cropping at the same position). All-zero
// offsets take an exact identity path (bit-identical patches).
PairSample MakePairSample(const GrayImage& img, const GenConfig& cfg, const Rect& crop,
                          const FourPointOffsets& delta);

// Three-step generation: crop I_s at a border-avoiding position, then
// perturb the patch corners by Uniform[-rho, rho] per component.
// Draw order from rng: x, y, then du1, dv1, ..., du4, dv4.
// Throws kImageTooSmall.
PairSample GeneratePair(const GrayImage& img, const GenConfig& cfg, Rng& rng);

// Simple-shape image settings.
struct GssConfig {
  int image_size = 320;
  int n_shapes = 8;
  double size_min = 16.0;
  double size_max = 96.0;
  std::vector<float> intensity_levels{0.25f, 0.5f, 0.75f, 1.0f};
  double outline_probability = 0.5;
  double outline_width = 2.0;
  uint64_t seed = 0;

  void Validate() const;
};

// Shape list for one image; drawing order is the list order (later shapes
// overwrite earlier ones).
std::vector<ShapeSpec> GenerateGssShapes(const GssConfig& cfg, Rng& rng);

// Black background, n_shapes random shapes.
GrayImage GenerateGssImage(const GssConfig& cfg, Rng& rng);

// Deterministic, indexable sample stream. Sample(i) derives its own RNG
// stream from the configured seed and i, so any worker may compute any
// index independently.
class PairSource {
 public:
  virtual ~PairSource() = default;
  virtual PairSample Sample(uint64_t index) const = 0;
  virtual std::string Label() const = 0;
};

// Stream over a fixed image set: picks an image uniformly, then a pair.
// With blur_sources, images are blurred by the 3x3 Gaussian before any pair
// generation.
class ImageSetSource : public PairSource {
 public:
  ImageSetSource(std::vector<GrayImage> images, GenConfig cfg, std::string label,
                 bool blur_sources = false);

  PairSample Sample(uint64_t index) const override;
  std::string Label() const override { return label_; }
  size_t ImageCount() const { return images_.size(); }

 private:
  std::vector<GrayImage> images_;
  GenConfig cfg_;
  std::string label_;
};

// Stream of freshly generated GSS images, one per sample index.
class GssSource : public PairSource {
 public:
  GssSource(GssConfig gss, GenConfig cfg, bool blur_sources = false);

  PairSample Sample(uint64_t index) const override;
  std::string Label() const override;

  // Shape list underlying a given sample, for mask-based statistics.
  std::vector<ShapeSpec> ShapesFor(uint64_t index) const;

  const GssConfig& gss_config() const { return gss_; }

 private:
  GssConfig gss_;
  GenConfig cfg_;
  bool blur_;
};

enum class CorpusSplit { kAll, kTrainHalf, kEvalHalf };

// Loads every ingestible image from a directory, in lexicographic filename
// order. Images too small for the generation config are skipped with a
// warning (collected into *warnings when non-null, otherwise stderr).
// The hash split partitions by FNV-1a(filename) parity.
// Throws kEmptyCorpus when no usable image remains.
std::vector<GrayImage> LoadCorpusImages(const std::filesystem::path& dir, const GenConfig& cfg,
                                        CorpusSplit split,
                                        std::vector<std::string>* warnings = nullptr);

std::unique_ptr<ImageSetSource> MakeCorpusSource(const std::filesystem::path& dir,
                                                 const GenConfig& cfg, CorpusSplit split,
                                                 bool blur_sources = false,
                                                 std::vector<std::string>* warnings = nullptr);

}  // namespace homlab
