#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace homlab {

// 3x3 convolution with zero padding 1 and stride 1 or 2. Weight layout is
// out-major: weights[((o * in + c) * 3 + ky) * 3 + kx].
template <typename T>
struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  std::vector<T> weights;
  std::vector<T> bias;

  static ConvLayer Make(int in_c, int out_c, int stride) {
    ConvLayer l;
    l.in_channels = in_c;
    l.out_channels = out_c;
    l.stride = stride;
    l.weights.assign(static_cast<size_t>(out_c) * in_c * 9, T(0));
    l.bias.assign(static_cast<size_t>(out_c), T(0));
    return l;
  }

  // Kaiming fan-in initialization for ReLU stacks; biases stay zero.
  void InitKaiming(Rng& rng) {
    const double std_dev = std::sqrt(2.0 / (static_cast<double>(in_channels) * 9.0));
    for (T& w : weights) w = static_cast<T>(std_dev * rng.Gaussian());
    std::fill(bias.begin(), bias.end(), T(0));
  }

  size_t ParamCount() const { return weights.size() + bias.size(); }
};

inline int ConvOutDim(int n, int stride) { return (n - 1) / stride + 1; }

namespace detail {

// Index bounds so that yo*stride + k - 1 stays inside [0, n_in - 1].
inline void TapBounds(int k, int stride, int n_in, int n_out, int* lo, int* hi) {
  *lo = (k == 0) ? 1 : 0;  // yo*stride >= 1 - k; holds for stride in {1, 2}
  // yo*stride <= n_in - 1 - (k - 1); the n_in - k < 0 case must floor to -1.
  const int max_from_input = (n_in - k) < 0 ? -1 : (n_in - k) / stride;
  *hi = std::min(n_out - 1, max_from_input);
}

}  // namespace detail

// Cross-correlation semantics (no kernel flip). in is C x H x W, out is
// filled (not accumulated) with O x Ho x Wo. Per output pixel the taps
// accumulate in (c, ky, kx) order; the interior of each row takes a fused
// three-tap pass with no bounds checks.
template <typename T>
void ConvForward(const ConvLayer<T>& layer, const T* in, int h, int w, T* out, int ho, int wo) {
  const int C = layer.in_channels;
  const int s = layer.stride;
  // All three kx taps are in range iff xo*s - 1 >= 0 and xo*s + 1 <= w - 1.
  const int x_full_lo = 1;
  const int x_full_hi = std::min(wo - 1, (w - 2) / s);
  for (int o = 0; o < layer.out_channels; ++o) {
    T* out_ch = out + static_cast<size_t>(o) * ho * wo;
    std::fill(out_ch, out_ch + static_cast<size_t>(ho) * wo, layer.bias[o]);
    for (int c = 0; c < C; ++c) {
      const T* in_ch = in + static_cast<size_t>(c) * h * w;
      const T* wk = layer.weights.data() + (static_cast<size_t>(o) * C + c) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        int y_lo, y_hi;
        detail::TapBounds(ky, s, h, ho, &y_lo, &y_hi);
        const T w0 = wk[ky * 3], w1 = wk[ky * 3 + 1], w2 = wk[ky * 3 + 2];
        for (int yo = y_lo; yo <= y_hi; ++yo) {
          const T* in_row = in_ch + static_cast<size_t>(yo * s + ky - 1) * w;
          T* out_row = out_ch + static_cast<size_t>(yo) * wo;
          const auto edge = [&](int xo) {
            T v = out_row[xo];
            const int base = xo * s - 1;
            if (base >= 0 && base < w) v += w0 * in_row[base];
            if (base + 1 >= 0 && base + 1 < w) v += w1 * in_row[base + 1];
            if (base + 2 >= 0 && base + 2 < w) v += w2 * in_row[base + 2];
            out_row[xo] = v;
          };
          for (int xo = 0; xo < std::min(x_full_lo, wo); ++xo) edge(xo);
          if (s == 1) {
            const T* p = in_row - 1;
            for (int xo = x_full_lo; xo <= x_full_hi; ++xo) {
              T v = out_row[xo];
              v += w0 * p[xo];
              v += w1 * p[xo + 1];
              v += w2 * p[xo + 2];
              out_row[xo] = v;
            }
          } else {
            for (int xo = x_full_lo; xo <= x_full_hi; ++xo) {
              const T* p = in_row + xo * s - 1;
              T v = out_row[xo];
              v += w0 * p[0];
              v += w1 * p[1];
              v += w2 * p[2];
              out_row[xo] = v;
            }
          }
          for (int xo = std::max(x_full_lo, x_full_hi + 1); xo < wo; ++xo) edge(xo);
        }
      }
    }
  }
}

// Gradient w.r.t. the layer input. grad_in is C x H x W and must be zeroed
// by the caller. The stride-1 case runs as a gather (full correlation with
// the flipped kernel); the stride-2 case scatters like the forward pass.
template <typename T>
void ConvBackwardInput(const ConvLayer<T>& layer, const T* grad_out, int ho, int wo, T* grad_in,
                       int h, int w) {
  const int C = layer.in_channels;
  const int s = layer.stride;
  for (int o = 0; o < layer.out_channels; ++o) {
    const T* g_ch = grad_out + static_cast<size_t>(o) * ho * wo;
    for (int c = 0; c < C; ++c) {
      T* gin_ch = grad_in + static_cast<size_t>(c) * h * w;
      const T* wk = layer.weights.data() + (static_cast<size_t>(o) * C + c) * 9;
      if (s == 1) {
        // gin[yi][xi] += sum_k w[ky][kx] * g[yi + 1 - ky][xi + 1 - kx].
        for (int ky = 0; ky < 3; ++ky) {
          const T w0 = wk[ky * 3], w1 = wk[ky * 3 + 1], w2 = wk[ky * 3 + 2];
          const int yi_lo = std::max(0, 0 + ky - 1);
          const int yi_hi = std::min(h - 1, ho - 1 + ky - 1);
          for (int yi = yi_lo; yi <= yi_hi; ++yi) {
            const T* g_row = g_ch + static_cast<size_t>(yi + 1 - ky) * wo;
            T* gin_row = gin_ch + static_cast<size_t>(yi) * w;
            const auto edge = [&](int xi) {
              T v = gin_row[xi];
              if (xi + 1 < wo) v += w0 * g_row[xi + 1];
              if (xi >= 0 && xi < wo) v += w1 * g_row[xi];
              if (xi - 1 >= 0) v += w2 * g_row[xi - 1];
              gin_row[xi] = v;
            };
            edge(0);
            const int hi = std::min(w - 1, wo - 2);
            for (int xi = 1; xi <= hi; ++xi) {
              T v = gin_row[xi];
              v += w0 * g_row[xi + 1];
              v += w1 * g_row[xi];
              v += w2 * g_row[xi - 1];
              gin_row[xi] = v;
            }
            for (int xi = std::max(1, hi + 1); xi < w; ++xi) edge(xi);
          }
        }
      } else {
        for (int ky = 0; ky < 3; ++ky) {
          int y_lo, y_hi;
          detail::TapBounds(ky, s, h, ho, &y_lo, &y_hi);
          for (int kx = 0; kx < 3; ++kx) {
            int x_lo, x_hi;
            detail::TapBounds(kx, s, w, wo, &x_lo, &x_hi);
            const T wv = wk[ky * 3 + kx];
            for (int yo = y_lo; yo <= y_hi; ++yo) {
              T* gin_row = gin_ch + static_cast<size_t>(yo * s + ky - 1) * w + (kx - 1);
              const T* g_row = g_ch + static_cast<size_t>(yo) * wo;
              for (int xo = x_lo; xo <= x_hi; ++xo) gin_row[xo * s] += wv * g_row[xo];
            }
          }
        }
      }
    }
  }
}

// Gradient w.r.t. weights and bias, accumulated (+=) into grad_w / grad_b.
template <typename T>
void ConvBackwardParams(const ConvLayer<T>& layer, const T* in, int h, int w, const T* grad_out,
                        int ho, int wo, T* grad_w, T* grad_b) {
  const int C = layer.in_channels;
  const int s = layer.stride;
  for (int o = 0; o < layer.out_channels; ++o) {
    const T* g_ch = grad_out + static_cast<size_t>(o) * ho * wo;
    double b_acc = 0.0;
    for (int64_t i = 0; i < static_cast<int64_t>(ho) * wo; ++i) b_acc += g_ch[i];
    grad_b[o] += static_cast<T>(b_acc);
    for (int c = 0; c < C; ++c) {
      const T* in_ch = in + static_cast<size_t>(c) * h * w;
      T* gw = grad_w + (static_cast<size_t>(o) * C + c) * 9;
      const int x_full_lo = 1;
      const int x_full_hi = std::min(wo - 1, (w - 2) / s);
      for (int ky = 0; ky < 3; ++ky) {
        int y_lo, y_hi;
        detail::TapBounds(ky, s, h, ho, &y_lo, &y_hi);
        double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0;
        for (int yo = y_lo; yo <= y_hi; ++yo) {
          const T* in_row = in_ch + static_cast<size_t>(yo * s + ky - 1) * w;
          const T* g_row = g_ch + static_cast<size_t>(yo) * wo;
          T r0 = 0, r1 = 0, r2 = 0;
          for (int xo = 0; xo < std::min(x_full_lo, wo); ++xo) {
            const int base = xo * s - 1;
            if (base >= 0) r0 += g_row[xo] * in_row[base];
            r1 += g_row[xo] * in_row[base + 1];
            if (base + 2 < w) r2 += g_row[xo] * in_row[base + 2];
          }
          if (s == 1) {
            const T* p = in_row - 1;
            for (int xo = x_full_lo; xo <= x_full_hi; ++xo) {
              const T g = g_row[xo];
              r0 += g * p[xo];
              r1 += g * p[xo + 1];
              r2 += g * p[xo + 2];
            }
          } else {
            for (int xo = x_full_lo; xo <= x_full_hi; ++xo) {
              const T* p = in_row + xo * s - 1;
              const T g = g_row[xo];
              r0 += g * p[0];
              r1 += g * p[1];
              r2 += g * p[2];
            }
          }
          for (int xo = std::max(x_full_lo, x_full_hi + 1); xo < wo; ++xo) {
            const int base = xo * s - 1;
            if (base >= 0 && base < w) r0 += g_row[xo] * in_row[base];
            if (base + 1 < w) r1 += g_row[xo] * in_row[base + 1];
            if (base + 2 < w) r2 += g_row[xo] * in_row[base + 2];
          }
          acc0 += r0;
          acc1 += r1;
          acc2 += r2;
        }
        gw[ky * 3] += static_cast<T>(acc0);
        gw[ky * 3 + 1] += static_cast<T>(acc1);
        gw[ky * 3 + 2] += static_cast<T>(acc2);
      }
    }
  }
}

template <typename T>
void ReluForward(const T* in, int64_t n, T* out) {
  for (int64_t i = 0; i < n; ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
}

// grad_in = grad_out where the pre-activation was positive, else 0.
template <typename T>
void ReluBackward(const T* pre_act, const T* grad_out, int64_t n, T* grad_in) {
  for (int64_t i = 0; i < n; ++i) grad_in[i] = pre_act[i] > T(0) ? grad_out[i] : T(0);
}

// Mean of one contiguous channel, accumulated in double.
template <typename T>
T ChannelMean(const T* ch, int64_t n) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += ch[i];
  return static_cast<T>(acc / static_cast<double>(n));
}

template <typename T>
void GapForward(const T* in, int channels, int64_t hw, T* out) {
  for (int c = 0; c < channels; ++c) out[c] = ChannelMean(in + c * hw, hw);
}

template <typename T>
void GapBackward(const T* grad_out, int channels, int64_t hw, T* grad_in) {
  for (int c = 0; c < channels; ++c) {
    const T g = grad_out[c] / static_cast<T>(hw);
    T* row = grad_in + c * hw;
    for (int64_t i = 0; i < hw; ++i) row[i] = g;
  }
}

}  // namespace homlab
