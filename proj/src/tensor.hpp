#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "error.hpp"

namespace homlab {

// Dense n-dimensional array, row-major.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(Numel(shape)), T(0));
  }

  static int64_t Numel(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
      if (d < 1) Fail(ErrorKind::kShapeMismatch, "tensor dimensions must be >= 1");
      n *= d;
    }
    return n;
  }

  int64_t Numel() const { return static_cast<int64_t>(data.size()); }

  void Resize(std::vector<int> s) {
    const auto n = static_cast<size_t>(Numel(s));
    shape = std::move(s);
    if (data.size() != n) data.assign(n, T(0));
  }
};

}  // namespace homlab
