#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "datagen.hpp"
#include "image.hpp"

namespace homlab {

struct Keypoint {
  Point2 position;
  double response = 0.0;
};

// 256 intensity comparisons on a blurred 31x31 patch; axis-aligned pairs,
// no orientation or pyramid.
struct BinaryDescriptor {
  std::array<uint64_t, 4> bits{};

  int HammingDistance(const BinaryDescriptor& other) const;
};

struct RansacConfig {
  int iterations = 2000;
  double inlier_threshold = 3.0;  // px, symmetric transfer error
  int min_inliers = 8;
  uint64_t seed = 0;
};

struct BaselineConfig {
  RansacConfig ransac;
  int max_keypoints = 500;
  double fast_threshold = 0.06;  // intensity units in [0, 1]
  double match_ratio = 0.8;
};

// FAST-9 segment test with non-max suppression on a Harris-style response.
// Keypoints are at least 7 px from the borders, sorted by response
// descending, at most max_n of them.
std::vector<Keypoint> DetectCorners(const GrayImage& img, int max_n,
                                    double threshold = 0.06);

// Shares one blurred copy of the image across descriptor extractions.
class BriefExtractor {
 public:
  explicit BriefExtractor(const GrayImage& img);

  // Throws kTooCloseToBorder unless the keypoint is >= 16 px from borders.
  BinaryDescriptor Describe(const Keypoint& kp) const;

 private:
  GrayImage blurred_;
};

BinaryDescriptor DescribeOne(const GrayImage& img, const Keypoint& kp);

// Mutual-best-match pairs passing the Lowe ratio test under the Hamming
// metric. Returns (index in a, index in b) pairs.
std::vector<std::pair<int, int>> MatchDescriptors(const std::vector<BinaryDescriptor>& a,
                                                  const std::vector<BinaryDescriptor>& b,
                                                  double ratio = 0.8);

struct RansacResult {
  HomographyMatrix homography;
  std::vector<bool> inliers;
  int inlier_count = 0;
};

// Classic hypothesize-4/verify with symmetric transfer error, final model
// refit with least-squares DLT on all inliers.
// Throws kInsufficientMatches (< 4 pairs) or kNoConsensus.
RansacResult RansacHomography(std::span<const PointPair> matches, const RansacConfig& cfg);

struct BaselineEstimate {
  FourPointOffsets offsets;  // zero when failed (identity fallback)
  bool failed = false;
  int n_matches = 0;
  int n_inliers = 0;
};

// Full classical pipeline on a patch pair; never throws, failures are
// flagged and fall back to the zero-offset prediction.
BaselineEstimate EstimatePairClassic(const PairSample& sample, const BaselineConfig& cfg);

}  // namespace homlab
