#include "model.hpp"

#include <cmath>

namespace homlab {

HenLayout HenLayout::Scaled(double width_scale) {
  HenLayout layout;
  for (int& c : layout.feature_channels) {
    c = std::max(1, static_cast<int>(std::lround(c * width_scale)));
  }
  return layout;
}

std::vector<float> MakeModelInput(const PairSample& sample) {
  const size_t n = sample.source_patch.data.size();
  if (sample.warped_patch.data.size() != n) {
    Fail(ErrorKind::kShapeMismatch, "pair patches have mismatched sizes");
  }
  std::vector<float> input(2 * n);
  std::copy(sample.source_patch.data.begin(), sample.source_patch.data.end(), input.begin());
  std::copy(sample.warped_patch.data.begin(), sample.warped_patch.data.end(),
            input.begin() + static_cast<ptrdiff_t>(n));
  return input;
}

}  // namespace homlab
