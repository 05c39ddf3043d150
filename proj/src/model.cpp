// SPDX-License-Identifier: Apache-2.0
#include "asrz/model.hpp"

#include <cmath>
#include <cstring>

#include "asrz/error.hpp"

namespace asrz {

namespace {

struct Shape {
  size_t in;
  size_t out;
};

Shape layer_shape(const ModelDims& d, int layer) {
  switch (layer) {
    case 1: return {d.input_width, d.hidden};
    case 2:
    case 3:
    case 5: return {d.hidden, d.hidden};
    case 4: return {2 * d.hidden, 4 * d.hidden};
    case 6: return {d.hidden, d.n_labels};
    default: throw Error(ErrorCode::InvalidArgument, "layer index out of range");
  }
}

void apply_dropout(Matrix& x, Matrix& mask, const ForwardOptions& options, Rng& rng) {
  mask = Matrix(x.rows(), x.cols(), 1.0);
  if (options.mode != Mode::Train || options.dropout.rate <= 0.0) return;
  const double keep_scale = 1.0 / (1.0 - options.dropout.rate);
  for (double& m : mask.values()) {
    m = rng.uniform() < options.dropout.rate ? 0.0 : keep_scale;
  }
  auto xv = x.values();
  auto mv = mask.values();
  for (size_t i = 0; i < xv.size(); ++i) xv[i] *= mv[i];
}

// dz = dy ⊙ mask ⊙ 1[0 < pre < cap]
Matrix relu_backward(const Matrix& dy, const Matrix& pre, const Matrix& mask, double cap) {
  Matrix dz(dy.rows(), dy.cols());
  auto out = dz.values();
  auto d = dy.values();
  auto p = pre.values();
  auto m = mask.values();
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = (p[i] > 0.0 && p[i] < cap) ? d[i] * m[i] : 0.0;
  }
  return dz;
}

}  // namespace

void ModelDims::validate() const {
  if (input_width == 0 || hidden == 0 || n_labels < 2) {
    throw Error(ErrorCode::InvalidArgument,
                "model dims require positive widths and n_labels >= 2");
  }
}

ModelParams ModelParams::zeros(const ModelDims& dims) {
  dims.validate();
  ModelParams p;
  p.dims = dims;
  for (int k = 1; k <= kNumLayers; ++k) {
    const Shape s = layer_shape(dims, k);
    p.layer(k).weight = Matrix(s.in, s.out);
    p.layer(k).bias = Matrix(1, s.out);
  }
  return p;
}

void ModelParams::check_shapes() const {
  dims.validate();
  for (int k = 1; k <= kNumLayers; ++k) {
    const Shape s = layer_shape(dims, k);
    const auto& l = layer(k);
    if (l.weight.rows() != s.in || l.weight.cols() != s.out || l.bias.rows() != 1 ||
        l.bias.cols() != s.out) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(k) +
                                                " tensors disagree with model dims");
    }
  }
}

size_t layer_parameter_count(const ModelDims& dims, int layer) {
  const Shape s = layer_shape(dims, layer);
  return s.in * s.out + s.out;
}

size_t ModelParams::parameter_count() const {
  size_t n = 0;
  for (int k = 1; k <= kNumLayers; ++k) n += layer_parameter_count(dims, k);
  return n;
}

std::string tensor_name(int layer, bool bias) {
  return "layer" + std::to_string(layer) + (bias ? ".bias" : ".weight");
}

void glorot_uniform(Matrix& weight, Rng& rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(weight.rows() + weight.cols()));
  for (double& w : weight.values()) w = rng.uniform(-limit, limit);
}

ModelParams init_params(const ModelDims& dims, Rng& rng) {
  ModelParams p = ModelParams::zeros(dims);
  for (int k = 1; k <= kNumLayers; ++k) glorot_uniform(p.layer(k).weight, rng);
  auto bias = p.layer(kLstmLayer).bias.row(0);
  for (size_t j = 2 * dims.hidden; j < 3 * dims.hidden; ++j) bias[j] = kForgetBias;
  return p;
}

LstmStep lstm_step(std::span<const double> h_prev_x, const LayerParams& lstm,
                   std::span<const double> c_prev) {
  const size_t hidden = c_prev.size();
  if (lstm.weight.cols() != 4 * hidden || lstm.weight.rows() != h_prev_x.size() ||
      lstm.bias.cols() != 4 * hidden) {
    throw Error(ErrorCode::DimensionMismatch, "lstm_step shapes disagree");
  }
  LstmStep step;
  step.gates.assign(lstm.bias.row(0).begin(), lstm.bias.row(0).end());
  for (size_t r = 0; r < h_prev_x.size(); ++r) {
    const double v = h_prev_x[r];
    if (v == 0.0) continue;
    auto w = lstm.weight.row(r);
    for (size_t j = 0; j < w.size(); ++j) step.gates[j] += v * w[j];
  }
  step.h.resize(hidden);
  step.c.resize(hidden);
  for (size_t j = 0; j < hidden; ++j) {
    const double i = sigmoid(step.gates[j]);
    const double g = std::tanh(step.gates[hidden + j]);
    const double f = sigmoid(step.gates[2 * hidden + j]);
    const double o = sigmoid(step.gates[3 * hidden + j]);
    step.gates[j] = i;
    step.gates[hidden + j] = g;
    step.gates[2 * hidden + j] = f;
    step.gates[3 * hidden + j] = o;
    step.c[j] = f * c_prev[j] + i * g;
    step.h[j] = o * std::tanh(step.c[j]);
  }
  return step;
}

uint64_t fingerprint(const ModelParams& params) {
  // FNV-1a over the raw bits of every tensor.
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const Matrix& m) {
    for (double v : m.values()) {
      uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xFF;
        h *= 0x100000001b3ULL;
      }
    }
  };
  for (const auto& l : params.layers) {
    mix(l.weight);
    mix(l.bias);
  }
  return h;
}

ForwardResult forward(const ModelParams& params, const Matrix& feats,
                      const ForwardOptions& options, Rng& rng) {
  const ModelDims& dims = params.dims;
  if (feats.cols() != dims.input_width) {
    throw Error(ErrorCode::DimensionMismatch,
                "features have width " + std::to_string(feats.cols()) + ", model expects " +
                    std::to_string(dims.input_width));
  }
  if (options.dropout.rate < 0.0 || options.dropout.rate >= 1.0) {
    throw Error(ErrorCode::InvalidArgument, "dropout rate must lie in [0, 1)");
  }
  const size_t frames = feats.rows();
  const size_t hidden = dims.hidden;
  const double cap = options.relu_cap;

  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.recurrence = options.recurrence;
  cache.relu_cap = cap;

  const Matrix* x = &feats;
  for (int k = 1; k <= 3; ++k) {
    Matrix pre = matmul(*x, params.layer(k).weight);
    add_row_inplace(pre, params.layer(k).bias);
    Matrix out = relu_clip(pre, cap);
    apply_dropout(out, cache.masks[k - 1], options, rng);
    cache.fc_pre[k - 1] = std::move(pre);
    cache.fc_out[k - 1] = std::move(out);
    x = &cache.fc_out[k - 1];
  }

  if (options.recurrence == Recurrence::Identity) {
    cache.lstm_out = *x;
  } else {
    const auto& lstm = params.layer(kLstmLayer);
    cache.lstm_in = Matrix(frames, 2 * hidden);
    cache.gates = Matrix(frames, 4 * hidden);
    cache.cells = Matrix(frames, hidden);
    cache.lstm_out = Matrix(frames, hidden);
    std::vector<double> c_prev(hidden, 0.0);
    for (size_t t = 0; t < frames; ++t) {
      auto in = cache.lstm_in.row(t);
      if (t > 0) {
        auto h_prev = cache.lstm_out.row(t - 1);
        std::copy(h_prev.begin(), h_prev.end(), in.begin());
      }
      auto xt = x->row(t);
      std::copy(xt.begin(), xt.end(), in.begin() + hidden);
      LstmStep step = lstm_step(in, lstm, c_prev);
      std::copy(step.gates.begin(), step.gates.end(), cache.gates.row(t).begin());
      std::copy(step.c.begin(), step.c.end(), cache.cells.row(t).begin());
      std::copy(step.h.begin(), step.h.end(), cache.lstm_out.row(t).begin());
      c_prev = std::move(step.c);
    }
  }

  cache.fc5_pre = matmul(cache.lstm_out, params.layer(5).weight);
  add_row_inplace(cache.fc5_pre, params.layer(5).bias);
  cache.fc5_out = relu_clip(cache.fc5_pre, cap);
  apply_dropout(cache.fc5_out, cache.masks[3], options, rng);

  Matrix logits = matmul(cache.fc5_out, params.layer(kOutputLayer).weight);
  add_row_inplace(logits, params.layer(kOutputLayer).bias);
  result.logprobs = log_softmax_rows(logits);

  if (options.mode == Mode::Train) {
    cache.trainable = true;
    cache.params_fingerprint = fingerprint(params);
    cache.input = feats;
    cache.probs = result.logprobs;
    for (double& v : cache.probs.values()) v = std::exp(v);
  } else {
    cache = ForwardCache{};
  }
  return result;
}

Gradients backward(const ForwardCache& cache, const ModelParams& params,
                   const Matrix& dlogprobs) {
  if (!cache.trainable || cache.params_fingerprint != fingerprint(params)) {
    throw Error(ErrorCode::StaleCache,
                "cache was not produced by a train-mode forward on these parameters");
  }
  if (dlogprobs.rows() != cache.probs.rows() || dlogprobs.cols() != cache.probs.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "dlogprobs shape disagrees with forward output");
  }
  const size_t frames = dlogprobs.rows();
  const size_t hidden = params.dims.hidden;
  const double cap = cache.relu_cap;
  Gradients grads = ModelParams::zeros(params.dims);

  // Log-softmax Jacobian: dlogit_j = dlp_j - p_j Σ_k dlp_k.
  Matrix dlogits(frames, dlogprobs.cols());
  for (size_t t = 0; t < frames; ++t) {
    auto d = dlogprobs.row(t);
    auto p = cache.probs.row(t);
    auto out = dlogits.row(t);
    double total = 0.0;
    for (double v : d) total += v;
    for (size_t j = 0; j < d.size(); ++j) out[j] = d[j] - p[j] * total;
  }

  grads.layer(6).weight = matmul_at_b(cache.fc5_out, dlogits);
  grads.layer(6).bias = column_sums(dlogits);
  const Matrix dh5 = matmul_a_bt(dlogits, params.layer(6).weight);

  const Matrix dz5 = relu_backward(dh5, cache.fc5_pre, cache.masks[3], cap);
  grads.layer(5).weight = matmul_at_b(cache.lstm_out, dz5);
  grads.layer(5).bias = column_sums(dz5);
  const Matrix dh4 = matmul_a_bt(dz5, params.layer(5).weight);

  Matrix dx3;
  if (cache.recurrence == Recurrence::Identity) {
    dx3 = dh4;
  } else {
    const auto& lstm = params.layer(kLstmLayer);
    dx3 = Matrix(frames, hidden);
    Matrix dpre(frames, 4 * hidden);
    std::vector<double> dh_next(hidden, 0.0);
    std::vector<double> dc_next(hidden, 0.0);
    for (size_t step = frames; step-- > 0;) {
      auto gates = cache.gates.row(step);
      auto cells = cache.cells.row(step);
      auto out = dpre.row(step);
      for (size_t j = 0; j < hidden; ++j) {
        const double i = gates[j];
        const double g = gates[hidden + j];
        const double f = gates[2 * hidden + j];
        const double o = gates[3 * hidden + j];
        const double tc = std::tanh(cells[j]);
        const double c_prev = step > 0 ? cache.cells(step - 1, j) : 0.0;
        const double dh = dh4(step, j) + dh_next[j];
        const double dc = dc_next[j] + dh * o * (1.0 - tc * tc);
        out[j] = dc * g * i * (1.0 - i);
        out[hidden + j] = dc * i * (1.0 - g * g);
        out[2 * hidden + j] = dc * c_prev * f * (1.0 - f);
        out[3 * hidden + j] = dh * tc * o * (1.0 - o);
        dc_next[j] = dc * f;
      }
      // d(h_{t-1}, x_t) = dpre_t · Wᵀ
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      auto dx = dx3.row(step);
      for (size_t r = 0; r < 2 * hidden; ++r) {
        auto w = lstm.weight.row(r);
        double acc = 0.0;
        for (size_t j = 0; j < w.size(); ++j) acc += out[j] * w[j];
        if (r < hidden) {
          dh_next[r] = acc;
        } else {
          dx[r - hidden] = acc;
        }
      }
    }
    grads.layer(4).weight = matmul_at_b(cache.lstm_in, dpre);
    grads.layer(4).bias = column_sums(dpre);
  }

  Matrix dy = std::move(dx3);
  for (int k = 3; k >= 1; --k) {
    const Matrix dz = relu_backward(dy, cache.fc_pre[k - 1], cache.masks[k - 1], cap);
    const Matrix& layer_in = k == 1 ? cache.input : cache.fc_out[k - 2];
    grads.layer(k).weight = matmul_at_b(layer_in, dz);
    grads.layer(k).bias = column_sums(dz);
    if (k > 1) dy = matmul_a_bt(dz, params.layer(k).weight);
  }
  return grads;
}

}  // namespace asrz
