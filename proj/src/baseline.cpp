#include "baseline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "rng.hpp"

namespace homlab {

namespace {

// Bresenham circle of radius 3, starting at (0, -3), clockwise.
constexpr int kCircleDx[16] = {0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3, -3, -3, -2, -1};
constexpr int kCircleDy[16] = {-3, -3, -2, -1, 0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3};

constexpr int kFastArc = 9;
constexpr int kDetectBorder = 7;
constexpr int kDescribeBorder = 16;
constexpr int kBriefPairs = 256;

struct BriefPair {
  int8_t ax, ay, bx, by;
};

// Fixed comparison table: coordinates drawn from N(0, (31/5)^2), clamped to
// the 31x31 patch.
const std::array<BriefPair, kBriefPairs>& BriefTable() {
  static const auto table = [] {
    std::array<BriefPair, kBriefPairs> t{};
    Rng rng(0xB21EFu);
    const auto coord = [&rng]() {
      const double v = rng.Gaussian() * (31.0 / 5.0);
      return static_cast<int8_t>(std::clamp(static_cast<int>(std::lround(v)), -15, 15));
    };
    for (auto& p : t) {
      p.ax = coord();
      p.ay = coord();
      p.bx = coord();
      p.by = coord();
    }
    return t;
  }();
  return table;
}

// Harris-style corner response from Sobel gradients over a 5x5 window.
double HarrisResponse(const GrayImage& img, int cx, int cy) {
  double a = 0.0, b = 0.0, c = 0.0;
  for (int y = cy - 2; y <= cy + 2; ++y) {
    for (int x = cx - 2; x <= cx + 2; ++x) {
      const double ix = (img.At(x + 1, y - 1) + 2.0 * img.At(x + 1, y) + img.At(x + 1, y + 1)) -
                        (img.At(x - 1, y - 1) + 2.0 * img.At(x - 1, y) + img.At(x - 1, y + 1));
      const double iy = (img.At(x - 1, y + 1) + 2.0 * img.At(x, y + 1) + img.At(x + 1, y + 1)) -
                        (img.At(x - 1, y - 1) + 2.0 * img.At(x, y - 1) + img.At(x + 1, y - 1));
      a += ix * ix;
      b += ix * iy;
      c += iy * iy;
    }
  }
  return (a * c - b * b) - 0.04 * (a + c) * (a + c);
}

bool FastSegmentTest(const GrayImage& img, int x, int y, double t) {
  const float p = img.At(x, y);
  const double hi = p + t;
  const double lo = p - t;

  // Compass prescreen: an arc of 9 among 16 always covers two of the four
  // compass points.
  int brighter = 0, darker = 0;
  for (int i = 0; i < 16; i += 4) {
    const float v = img.At(x + kCircleDx[i], y + kCircleDy[i]);
    if (v > hi) ++brighter;
    if (v < lo) ++darker;
  }
  if (brighter < 2 && darker < 2) return false;

  int run_bright = 0, run_dark = 0;
  for (int i = 0; i < 16 + kFastArc; ++i) {
    const int j = i & 15;
    const float v = img.At(x + kCircleDx[j], y + kCircleDy[j]);
    run_bright = v > hi ? run_bright + 1 : 0;
    run_dark = v < lo ? run_dark + 1 : 0;
    if (run_bright >= kFastArc || run_dark >= kFastArc) return true;
  }
  return false;
}

bool TryProject(const HomographyMatrix& h, Point2 p, Point2* out) {
  const double w = h.h[6] * p.u + h.h[7] * p.v + h.h[8];
  if (std::abs(w) <= 1e-12) return false;
  out->u = (h.h[0] * p.u + h.h[1] * p.v + h.h[2]) / w;
  out->v = (h.h[3] * p.u + h.h[4] * p.v + h.h[5]) / w;
  return true;
}

double TriangleArea2(Point2 a, Point2 b, Point2 c) {
  return std::abs((b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u));
}

bool QuadDegenerate(const std::array<Point2, 4>& q) {
  for (int skip = 0; skip < 4; ++skip) {
    Point2 tri[3];
    int n = 0;
    for (int i = 0; i < 4; ++i) {
      if (i != skip) tri[n++] = q[i];
    }
    if (TriangleArea2(tri[0], tri[1], tri[2]) < 1e-6) return true;
  }
  return false;
}

}  // namespace

int BinaryDescriptor::HammingDistance(const BinaryDescriptor& other) const {
  int d = 0;
  for (int i = 0; i < 4; ++i) d += std::popcount(bits[i] ^ other.bits[i]);
  return d;
}

std::vector<Keypoint> DetectCorners(const GrayImage& img, int max_n, double threshold) {
  std::vector<Keypoint> out;
  if (img.width < 32 || img.height < 32 || max_n < 1) return out;

  // Candidate grid with responses, for 8-neighbor non-max suppression.
  const int w = img.width, h = img.height;
  std::vector<double> response(static_cast<size_t>(w) * h,
                               -std::numeric_limits<double>::infinity());
  std::vector<std::pair<int, int>> candidates;
  for (int y = kDetectBorder; y < h - kDetectBorder; ++y) {
    for (int x = kDetectBorder; x < w - kDetectBorder; ++x) {
      if (!FastSegmentTest(img, x, y, threshold)) continue;
      response[static_cast<size_t>(y) * w + x] = HarrisResponse(img, x, y);
      candidates.emplace_back(x, y);
    }
  }

  for (const auto& [x, y] : candidates) {
    const double r = response[static_cast<size_t>(y) * w + x];
    bool is_max = true;
    for (int dy = -1; dy <= 1 && is_max; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const double rn = response[static_cast<size_t>(y + dy) * w + (x + dx)];
        // Ties break toward the earlier scan position.
        if (rn > r || (rn == r && (dy < 0 || (dy == 0 && dx < 0)))) {
          is_max = false;
          break;
        }
      }
    }
    if (is_max) {
      out.push_back(Keypoint{{static_cast<double>(x), static_cast<double>(y)}, r});
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.position.v != b.position.v) return a.position.v < b.position.v;
    return a.position.u < b.position.u;
  });
  if (static_cast<int>(out.size()) > max_n) out.resize(max_n);
  return out;
}

BriefExtractor::BriefExtractor(const GrayImage& img) : blurred_(GaussianBlur3x3(img)) {}

BinaryDescriptor BriefExtractor::Describe(const Keypoint& kp) const {
  const int x = static_cast<int>(std::lround(kp.position.u));
  const int y = static_cast<int>(std::lround(kp.position.v));
  if (x < kDescribeBorder || y < kDescribeBorder || x >= blurred_.width - kDescribeBorder ||
      y >= blurred_.height - kDescribeBorder) {
    Fail(ErrorKind::kTooCloseToBorder, "keypoint too close to border for descriptor support");
  }
  BinaryDescriptor d;
  const auto& table = BriefTable();
  for (int i = 0; i < kBriefPairs; ++i) {
    const BriefPair& p = table[i];
    const float va = blurred_.At(x + p.ax, y + p.ay);
    const float vb = blurred_.At(x + p.bx, y + p.by);
    if (va < vb) d.bits[i >> 6] |= uint64_t{1} << (i & 63);
  }
  return d;
}

BinaryDescriptor DescribeOne(const GrayImage& img, const Keypoint& kp) {
  return BriefExtractor(img).Describe(kp);
}

std::vector<std::pair<int, int>> MatchDescriptors(const std::vector<BinaryDescriptor>& a,
                                                  const std::vector<BinaryDescriptor>& b,
                                                  double ratio) {
  std::vector<std::pair<int, int>> matches;
  if (a.empty() || b.empty()) return matches;

  std::vector<int> best_for_b(b.size(), -1);
  std::vector<int> best_dist_b(b.size(), std::numeric_limits<int>::max());
  for (size_t j = 0; j < b.size(); ++j) {
    for (size_t i = 0; i < a.size(); ++i) {
      const int d = a[i].HammingDistance(b[j]);
      if (d < best_dist_b[j]) {
        best_dist_b[j] = d;
        best_for_b[j] = static_cast<int>(i);
      }
    }
  }

  for (size_t i = 0; i < a.size(); ++i) {
    int best = std::numeric_limits<int>::max();
    int second = std::numeric_limits<int>::max();
    int best_j = -1;
    for (size_t j = 0; j < b.size(); ++j) {
      const int d = a[i].HammingDistance(b[j]);
      if (d < best) {
        second = best;
        best = d;
        best_j = static_cast<int>(j);
      } else if (d < second) {
        second = d;
      }
    }
    if (best_j < 0) continue;
    if (best_for_b[best_j] != static_cast<int>(i)) continue;  // mutual best only
    if (!(static_cast<double>(best) < ratio * static_cast<double>(second))) continue;
    matches.emplace_back(static_cast<int>(i), best_j);
  }
  return matches;
}

RansacResult RansacHomography(std::span<const PointPair> matches, const RansacConfig& cfg) {
  const int n = static_cast<int>(matches.size());
  if (n < 4) {
    Fail(ErrorKind::kInsufficientMatches,
         "RANSAC needs >= 4 matches, got " + std::to_string(n));
  }
  if (cfg.iterations < 1 || cfg.inlier_threshold <= 0.0) {
    Fail(ErrorKind::kInvalidValue, "RANSAC config requires iterations >= 1 and threshold > 0");
  }

  Rng rng(cfg.seed);
  const double thr = cfg.inlier_threshold;

  int best_count = 0;
  double best_err = std::numeric_limits<double>::max();
  std::vector<bool> best_mask(matches.size(), false);
  HomographyMatrix best_h;

  std::vector<bool> mask(matches.size(), false);
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    int idx[4];
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        idx[k] = static_cast<int>(rng.UniformInt(0, n - 1));
        fresh = true;
        for (int m = 0; m < k; ++m) fresh = fresh && idx[m] != idx[k];
      } while (!fresh);
    }
    std::array<Point2, 4> src, dst;
    for (int k = 0; k < 4; ++k) {
      src[k] = matches[idx[k]].src;
      dst[k] = matches[idx[k]].dst;
    }
    if (QuadDegenerate(src) || QuadDegenerate(dst)) continue;

    HomographyMatrix h;
    HomographyMatrix h_inv;
    try {
      h = HomographyFromCorrespondences(src, dst);
      h_inv = Invert(h);
    } catch (const Error&) {
      continue;
    }

    int count = 0;
    double err_sum = 0.0;
    std::fill(mask.begin(), mask.end(), false);
    for (size_t i = 0; i < matches.size(); ++i) {
      Point2 fwd, bwd;
      if (!TryProject(h, matches[i].src, &fwd) || !TryProject(h_inv, matches[i].dst, &bwd)) {
        continue;
      }
      const double d1 = std::hypot(fwd.u - matches[i].dst.u, fwd.v - matches[i].dst.v);
      const double d2 = std::hypot(bwd.u - matches[i].src.u, bwd.v - matches[i].src.v);
      const double e = std::max(d1, d2);
      if (e < thr) {
        mask[i] = true;
        ++count;
        err_sum += e;
      }
    }
    if (count > best_count || (count == best_count && err_sum < best_err)) {
      best_count = count;
      best_err = err_sum;
      best_mask = mask;
      best_h = h;
    }
  }

  if (best_count < std::max(4, cfg.min_inliers)) {
    Fail(ErrorKind::kNoConsensus, "best consensus has only " + std::to_string(best_count) +
                                      " inliers (min " + std::to_string(cfg.min_inliers) + ")");
  }

  // Refit on all inliers of the best hypothesis.
  std::vector<PointPair> inlier_pairs;
  for (size_t i = 0; i < matches.size(); ++i) {
    if (best_mask[i]) inlier_pairs.push_back(matches[i]);
  }
  RansacResult result;
  result.homography = best_h;
  try {
    result.homography = DltLeastSquares(inlier_pairs);
  } catch (const Error&) {
    // Keep the sample hypothesis when the refit degenerates.
  }

  // Final mask against the refit model.
  result.inliers.assign(matches.size(), false);
  HomographyMatrix h_inv;
  try {
    h_inv = Invert(result.homography);
  } catch (const Error&) {
    h_inv = HomographyMatrix::Identity();
  }
  for (size_t i = 0; i < matches.size(); ++i) {
    Point2 fwd, bwd;
    if (!TryProject(result.homography, matches[i].src, &fwd) ||
        !TryProject(h_inv, matches[i].dst, &bwd)) {
      continue;
    }
    const double d1 = std::hypot(fwd.u - matches[i].dst.u, fwd.v - matches[i].dst.v);
    const double d2 = std::hypot(bwd.u - matches[i].src.u, bwd.v - matches[i].src.v);
    if (std::max(d1, d2) < thr) {
      result.inliers[i] = true;
      ++result.inlier_count;
    }
  }
  return result;
}

BaselineEstimate EstimatePairClassic(const PairSample& sample, const BaselineConfig& cfg) {
  BaselineEstimate est;
  est.failed = true;

  const auto keep_inner = [&](std::vector<Keypoint> kps, const GrayImage& img) {
    std::vector<Keypoint> out;
    for (const Keypoint& kp : kps) {
      if (kp.position.u >= kDescribeBorder && kp.position.v >= kDescribeBorder &&
          kp.position.u < img.width - kDescribeBorder &&
          kp.position.v < img.height - kDescribeBorder) {
        out.push_back(kp);
      }
    }
    return out;
  };

  const std::vector<Keypoint> kps_a = keep_inner(
      DetectCorners(sample.source_patch, cfg.max_keypoints, cfg.fast_threshold),
      sample.source_patch);
  const std::vector<Keypoint> kps_b = keep_inner(
      DetectCorners(sample.warped_patch, cfg.max_keypoints, cfg.fast_threshold),
      sample.warped_patch);
  if (kps_a.empty() || kps_b.empty()) return est;

  const BriefExtractor ext_a(sample.source_patch);
  const BriefExtractor ext_b(sample.warped_patch);
  std::vector<BinaryDescriptor> desc_a, desc_b;
  desc_a.reserve(kps_a.size());
  desc_b.reserve(kps_b.size());
  for (const Keypoint& kp : kps_a) desc_a.push_back(ext_a.Describe(kp));
  for (const Keypoint& kp : kps_b) desc_b.push_back(ext_b.Describe(kp));

  const auto matches = MatchDescriptors(desc_a, desc_b, cfg.match_ratio);
  est.n_matches = static_cast<int>(matches.size());
  if (matches.size() < 4) return est;

  // The fitted map is the apparent motion source -> warped. The ground
  // truth homography acts the other way around (content at H(q) lands at
  // q), so the prediction is the inverse of the fit, read at the patch
  // corners; offsets are translation-covariant, so patch corners stand in
  // for crop corners.
  std::vector<PointPair> pairs;
  pairs.reserve(matches.size());
  for (const auto& [i, j] : matches) {
    pairs.push_back(PointPair{kps_a[i].position, kps_b[j].position});
  }
  try {
    const RansacResult fit = RansacHomography(pairs, cfg.ransac);
    est.n_inliers = fit.inlier_count;
    const Rect patch_rect{0, 0, sample.source_patch.width};
    est.offsets = HomographyToOffsets(Invert(fit.homography), PatchCorners(patch_rect));
    est.failed = false;
  } catch (const Error&) {
    est.offsets = FourPointOffsets{};
    est.failed = true;
  }
  return est;
}

}  // namespace homlab
