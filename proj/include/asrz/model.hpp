// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "asrz/numerics.hpp"

namespace asrz {

inline constexpr int kNumLayers = 6;
inline constexpr int kLstmLayer = 4;
inline constexpr int kOutputLayer = 6;

struct ModelDims {
  size_t input_width = 0;
  size_t hidden = 64;
  size_t n_labels = 0;  // alphabet size + 1; the blank is the last label

  void validate() const;
  bool operator==(const ModelDims&) const = default;
};

struct LayerParams {
  Matrix weight;
  Matrix bias;  // 1 × out

  bool operator==(const LayerParams&) const = default;
};

// Weights and biases of the six layers:
//   1-3  fully connected, clipped ReLU      (F→H, H→H, H→H)
//   4    unidirectional LSTM, input (h_{t-1}, x_t), packed gates (i, g, f, o)
//   5    fully connected, clipped ReLU      (H→H)
//   6    fully connected, log-softmax       (H→n_labels)
// Layers are addressed 1..6.
struct ModelParams {
  ModelDims dims;
  std::array<LayerParams, kNumLayers> layers;

  LayerParams& layer(int index) { return layers.at(static_cast<size_t>(index - 1)); }
  const LayerParams& layer(int index) const {
    return layers.at(static_cast<size_t>(index - 1));
  }

  // Zero-valued parameters with the shapes implied by `dims`.
  static ModelParams zeros(const ModelDims& dims);
  // Throws ShapeMismatch when a tensor disagrees with `dims`.
  void check_shapes() const;
  size_t parameter_count() const;

  bool operator==(const ModelParams&) const = default;
};

using Gradients = ModelParams;

// Tensor names used by checkpoints: "layer<k>.weight" / "layer<k>.bias".
std::string tensor_name(int layer, bool bias);
size_t layer_parameter_count(const ModelDims& dims, int layer);

// Glorot-uniform weights with limit sqrt(6 / (fan_in + fan_out)); zero biases
// except the LSTM forget-gate slice, which starts at 1.
ModelParams init_params(const ModelDims& dims, Rng& rng);
void glorot_uniform(Matrix& weight, Rng& rng);

inline constexpr double kForgetBias = 1.0;

struct LstmStep {
  std::vector<double> h;
  std::vector<double> c;
  std::vector<double> gates;  // post-activation (i, g, f, o), 4H
};

// One LSTM step on the concatenated row (h_prev, x_t).
LstmStep lstm_step(std::span<const double> h_prev_x, const LayerParams& lstm,
                   std::span<const double> c_prev);

struct DropoutSpec {
  double rate = 0.4;
};

enum class Mode { Train, Infer };

// Replacing the recurrent layer with the identity is only meaningful for
// locality tests of the feed-forward stack.
enum class Recurrence { Lstm, Identity };

struct ForwardCache {
  bool trainable = false;
  uint64_t params_fingerprint = 0;
  Recurrence recurrence = Recurrence::Lstm;
  double relu_cap = kDefaultReluCap;
  Matrix input;
  std::array<Matrix, 3> fc_pre;     // layers 1-3 pre-activations
  std::array<Matrix, 3> fc_out;     // layers 1-3 outputs after dropout
  std::array<Matrix, 4> masks;      // dropout scales for layers 1, 2, 3, 5
  Matrix lstm_in;                   // rows (h_{t-1}, x_t)
  Matrix gates;                     // post-activation (i, g, f, o)
  Matrix cells;
  Matrix lstm_out;
  Matrix fc5_pre;
  Matrix fc5_out;
  Matrix probs;                     // exp(logprobs)
};

struct ForwardResult {
  Matrix logprobs;  // T × n_labels, rows log-sum to 0
  ForwardCache cache;
};

struct ForwardOptions {
  DropoutSpec dropout{};
  Mode mode = Mode::Infer;
  double relu_cap = kDefaultReluCap;
  Recurrence recurrence = Recurrence::Lstm;
};

// `rng` is consumed only in train mode with a positive dropout rate.
ForwardResult forward(const ModelParams& params, const Matrix& feats,
                      const ForwardOptions& options, Rng& rng);

// Gradients of a scalar loss whose derivative w.r.t. the log-probabilities is
// `dlogprobs`. Throws StaleCache when `cache` was not produced by a train-mode
// forward call on these exact parameters.
Gradients backward(const ForwardCache& cache, const ModelParams& params,
                   const Matrix& dlogprobs);

uint64_t fingerprint(const ModelParams& params);

}  // namespace asrz
