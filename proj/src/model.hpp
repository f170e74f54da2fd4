#pragma once

#include <array>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "datagen.hpp"
#include "layers.hpp"
#include "tensor.hpp"

namespace homlab {

// Channel plan for the estimator: eight feature layers (each followed by
// ReLU, stride 2 on every second layer) and one projection layer to
// output_channels, with no activation, feeding global average pooling.
struct HenLayout {
  std::vector<int> feature_channels{16, 16, 32, 32, 64, 64, 128, 128};
  int input_channels = 2;
  int output_channels = 8;

  static HenLayout Scaled(double width_scale);
  int StrideOf(int layer_index) const {
    return (layer_index < 8 && layer_index % 2 == 1) ? 2 : 1;
  }
};

constexpr int kHenLayerCount = 9;
constexpr int kHenOutputs = 8;

// Per-sample activation store for forward + backward.
template <typename T>
struct ForwardTrace {
  Tensor<T> input;                       // 2 x P x P
  std::array<Tensor<T>, kHenLayerCount> conv_out;  // pre-activation per layer
  std::array<Tensor<T>, kHenLayerCount - 1> relu_out;
  std::array<T, kHenOutputs> gap{};
};

template <typename T>
struct ForwardResult {
  std::array<T, kHenOutputs> gap{};             // normalized units
  std::array<double, kHenOutputs> offsets_px{};  // gap * loss_scale
  Tensor<T> feature_maps;                        // pre-GAP, 8 x h x w
};

// Ping-pong activation-gradient buffers reused across samples.
template <typename T>
struct BackwardScratch {
  Tensor<T> a;
  Tensor<T> b;
};

// The shallow homography estimator: nine 3x3 conv layers and a GAP head
// mapping the eight-channel feature maps to the eight corner offsets.
template <typename T>
class HenModel {
 public:
  HenModel() = default;

  static HenModel RandomInit(const HenLayout& layout, int patch_size, double loss_scale,
                             uint64_t seed) {
    HenModel m;
    m.patch_size_ = patch_size;
    m.loss_scale_ = loss_scale;
    int in_c = layout.input_channels;
    for (size_t i = 0; i < layout.feature_channels.size(); ++i) {
      auto layer = ConvLayer<T>::Make(in_c, layout.feature_channels[i],
                                      layout.StrideOf(static_cast<int>(i)));
      in_c = layout.feature_channels[i];
      m.layers_.push_back(std::move(layer));
    }
    m.layers_.push_back(ConvLayer<T>::Make(in_c, layout.output_channels, 1));
    for (size_t i = 0; i < m.layers_.size(); ++i) {
      Rng rng(Mix(seed, 0x48454Eull, i));
      m.layers_[i].InitKaiming(rng);
    }
    return m;
  }

  static HenModel FromLayers(std::vector<ConvLayer<T>> layers, int patch_size,
                             double loss_scale) {
    HenModel m;
    m.layers_ = std::move(layers);
    m.patch_size_ = patch_size;
    m.loss_scale_ = loss_scale;
    return m;
  }

  const std::vector<ConvLayer<T>>& layers() const { return layers_; }
  std::vector<ConvLayer<T>>& layers() { return layers_; }
  int patch_size() const { return patch_size_; }
  double loss_scale() const { return loss_scale_; }

  size_t ParamCount() const {
    size_t n = 0;
    for (const auto& l : layers_) n += l.ParamCount();
    return n;
  }

  // Spatial side length of the output of layer `index` for this patch size.
  int SpatialDim(int index) const {
    int d = patch_size_;
    for (int i = 0; i <= index; ++i) d = ConvOutDim(d, layers_[i].stride);
    return d;
  }

  void ForwardInto(std::span<const T> input, ForwardTrace<T>& trace) const {
    const int n_layers = static_cast<int>(layers_.size());
    if (static_cast<int64_t>(input.size()) !=
        static_cast<int64_t>(layers_[0].in_channels) * patch_size_ * patch_size_) {
      Fail(ErrorKind::kShapeMismatch, "model input must be 2 x P x P with P = patch size");
    }
    trace.input.Resize({layers_[0].in_channels, patch_size_, patch_size_});
    std::copy(input.begin(), input.end(), trace.input.data.begin());

    const T* cur = trace.input.data.data();
    int dim = patch_size_;
    for (int i = 0; i < n_layers; ++i) {
      const ConvLayer<T>& layer = layers_[i];
      const int out_dim = ConvOutDim(dim, layer.stride);
      trace.conv_out[i].Resize({layer.out_channels, out_dim, out_dim});
      ConvForward(layer, cur, dim, dim, trace.conv_out[i].data.data(), out_dim, out_dim);
      if (i < n_layers - 1) {
        trace.relu_out[i].Resize({layer.out_channels, out_dim, out_dim});
        ReluForward(trace.conv_out[i].data.data(), trace.conv_out[i].Numel(),
                    trace.relu_out[i].data.data());
        cur = trace.relu_out[i].data.data();
      } else {
        cur = trace.conv_out[i].data.data();
      }
      dim = out_dim;
    }
    const Tensor<T>& feat = trace.conv_out[n_layers - 1];
    GapForward(feat.data.data(), feat.shape[0],
               static_cast<int64_t>(feat.shape[1]) * feat.shape[2], trace.gap.data());
  }

  ForwardResult<T> Forward(std::span<const T> input) const {
    ForwardTrace<T> trace;
    ForwardInto(input, trace);
    ForwardResult<T> r;
    r.gap = trace.gap;
    for (int k = 0; k < kHenOutputs; ++k) {
      r.offsets_px[k] = static_cast<double>(trace.gap[k]) * loss_scale_;
    }
    r.feature_maps = trace.conv_out[layers_.size() - 1];
    return r;
  }

  // Reverse pass from the gradient of the loss w.r.t. the GAP outputs.
  // Parameter gradients are accumulated (+=) into flat_grads, laid out
  // layer by layer as weights then bias (see FlatParamSize).
  void Backward(const ForwardTrace<T>& trace, const std::array<T, kHenOutputs>& gap_grad,
                std::span<T> flat_grads, BackwardScratch<T>& scratch) const {
    const int n_layers = static_cast<int>(layers_.size());
    const Tensor<T>& feat = trace.conv_out[n_layers - 1];
    const int64_t hw = static_cast<int64_t>(feat.shape[1]) * feat.shape[2];

    Tensor<T>& grad_a = scratch.a;
    Tensor<T>& grad_b = scratch.b;
    grad_a.Resize(feat.shape);
    GapBackward(gap_grad.data(), feat.shape[0], hw, grad_a.data.data());

    // grad_a holds dL/d(conv_out[i]) entering iteration i.
    size_t offset = FlatParamSize();
    for (int i = n_layers - 1; i >= 0; --i) {
      const ConvLayer<T>& layer = layers_[i];
      offset -= layer.ParamCount();
      const Tensor<T>& in_act = (i == 0) ? trace.input : trace.relu_out[i - 1];
      const int in_dim = in_act.shape[1];
      const int out_dim = trace.conv_out[i].shape[1];
      ConvBackwardParams(layer, in_act.data.data(), in_dim, in_dim, grad_a.data.data(), out_dim,
                         out_dim, flat_grads.data() + offset,
                         flat_grads.data() + offset + layer.weights.size());
      if (i == 0) break;
      grad_b.Resize(in_act.shape);
      std::fill(grad_b.data.begin(), grad_b.data.end(), T(0));
      ConvBackwardInput(layer, grad_a.data.data(), out_dim, out_dim, grad_b.data.data(), in_dim,
                        in_dim);
      // Through the ReLU that produced in_act.
      grad_a.Resize(in_act.shape);
      ReluBackward(trace.conv_out[i - 1].data.data(), grad_b.data.data(), grad_b.Numel(),
                   grad_a.data.data());
    }
  }

  size_t FlatParamSize() const { return ParamCount(); }

  // Reference to the flat parameter at index i (weights then bias, layer by
  // layer). Linear scan; intended for the gradient checker only.
  T& ParamRef(size_t i) {
    for (auto& l : layers_) {
      if (i < l.weights.size()) return l.weights[i];
      i -= l.weights.size();
      if (i < l.bias.size()) return l.bias[i];
      i -= l.bias.size();
    }
    Fail(ErrorKind::kShapeMismatch, "parameter index out of range");
  }

  template <typename U>
  HenModel<U> Cast() const {
    std::vector<ConvLayer<U>> layers;
    layers.reserve(layers_.size());
    for (const auto& l : layers_) {
      auto nl = ConvLayer<U>::Make(l.in_channels, l.out_channels, l.stride);
      for (size_t i = 0; i < l.weights.size(); ++i) nl.weights[i] = static_cast<U>(l.weights[i]);
      for (size_t i = 0; i < l.bias.size(); ++i) nl.bias[i] = static_cast<U>(l.bias[i]);
      layers.push_back(std::move(nl));
    }
    return HenModel<U>::FromLayers(std::move(layers), patch_size_, loss_scale_);
  }

 private:
  std::vector<ConvLayer<T>> layers_;
  int patch_size_ = 128;
  double loss_scale_ = 32.0;
};

// Stacks the two patches channel-wise (I_s first) into a model input.
std::vector<float> MakeModelInput(const PairSample& sample);

}  // namespace homlab
