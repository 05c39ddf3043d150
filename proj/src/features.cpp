// SPDX-License-Identifier: Apache-2.0
#include "asrz/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "asrz/error.hpp"

namespace asrz {

namespace {

constexpr double kLogFloor = 1e-10;

}  // namespace

size_t FeatureConfig::window_samples() const {
  return static_cast<size_t>(std::lround(window_ms * kSampleRate / 1000.0));
}

size_t FeatureConfig::hop_samples() const {
  return static_cast<size_t>(std::lround(hop_ms * kSampleRate / 1000.0));
}

size_t FeatureConfig::stacked_width() const {
  return static_cast<size_t>(n_cepstra) * (2 * static_cast<size_t>(context_radius) + 1);
}

void FeatureConfig::validate() const {
  if (!(hop_ms > 0.0) || window_ms < hop_ms || hop_samples() == 0) {
    throw Error(ErrorCode::InvalidArgument, "feature config requires window_ms >= hop_ms > 0");
  }
  if (n_mel_filters <= 0 || n_cepstra <= 0 || n_cepstra > n_mel_filters) {
    throw Error(ErrorCode::InvalidArgument,
                "feature config requires 0 < n_cepstra <= n_mel_filters");
  }
  if (context_radius < 0) {
    throw Error(ErrorCode::InvalidArgument, "context_radius must be >= 0");
  }
  if (!(preemphasis >= 0.0 && preemphasis < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "preemphasis must lie in [0, 1)");
  }
}

AudioClip preemphasize(const AudioClip& clip, double k) {
  if (!(k >= 0.0 && k < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "preemphasis coefficient must lie in [0, 1)");
  }
  AudioClip out{std::vector<double>(clip.samples.size()), clip.sample_rate};
  if (clip.samples.empty()) return out;
  out.samples[0] = clip.samples[0];
  for (size_t t = 1; t < clip.samples.size(); ++t) {
    out.samples[t] = clip.samples[t] - k * clip.samples[t - 1];
  }
  return out;
}

size_t next_power_of_two(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::vector<std::complex<double>>& data) {
  const size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw Error(ErrorCode::InvalidArgument, "fft size must be a power of two");
  }
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (size_t start = 0; start < n; start += len) {
      for (size_t k = 0; k < len / 2; ++k) {
        // Twiddles are evaluated directly rather than by recurrence to keep
        // rounding error flat across stages.
        const std::complex<double> w(std::cos(angle * k), std::sin(angle * k));
        const auto u = data[start + k];
        const auto v = data[start + k + len / 2] * w;
        data[start + k] = u + v;
        data[start + k + len / 2] = u - v;
      }
    }
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> mel_edges(int n_filters, int sample_rate) {
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_filters + 2);
  for (int i = 0; i < n_filters + 2; ++i) {
    edges[i] = mel_to_hz(top * i / (n_filters + 1));
  }
  return edges;
}

}  // namespace

std::vector<double> mel_filter_centers(int n_filters, int sample_rate) {
  auto edges = mel_edges(n_filters, sample_rate);
  return {edges.begin() + 1, edges.end() - 1};
}

Matrix mel_filterbank(int n_filters, size_t fft_size, int sample_rate) {
  const auto edges = mel_edges(n_filters, sample_rate);
  const size_t n_bins = fft_size / 2 + 1;
  Matrix bank(n_filters, n_bins);
  for (int m = 0; m < n_filters; ++m) {
    const double lo = edges[m];
    const double center = edges[m + 1];
    const double hi = edges[m + 2];
    for (size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      if (f > lo && f <= center) {
        bank(m, k) = (f - lo) / (center - lo);
      } else if (f > center && f < hi) {
        bank(m, k) = (hi - f) / (hi - center);
      }
    }
  }
  return bank;
}

size_t frame_count(size_t n_samples, const FeatureConfig& cfg) {
  const size_t window = cfg.window_samples();
  if (n_samples < window) return 0;
  return (n_samples - window) / cfg.hop_samples() + 1;
}

Matrix log_mel_energies(const AudioClip& clip, const FeatureConfig& cfg) {
  cfg.validate();
  if (clip.sample_rate != kSampleRate) {
    throw Error(ErrorCode::WrongSampleRate,
                "expected 16000 Hz, got " + std::to_string(clip.sample_rate));
  }
  const size_t window = cfg.window_samples();
  const size_t hop = cfg.hop_samples();
  const size_t n_frames = frame_count(clip.samples.size(), cfg);
  if (n_frames == 0) {
    throw Error(ErrorCode::ClipTooShort,
                std::to_string(clip.samples.size()) + " samples < window of " +
                    std::to_string(window));
  }
  const AudioClip emphasized = preemphasize(clip, cfg.preemphasis);
  const size_t fft_size = next_power_of_two(window);
  const size_t n_bins = fft_size / 2 + 1;
  const Matrix bank = mel_filterbank(cfg.n_mel_filters, fft_size, kSampleRate);

  std::vector<double> hamming(window);
  for (size_t n = 0; n < window; ++n) {
    hamming[n] = window == 1 ? 1.0
                             : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n /
                                                      static_cast<double>(window - 1));
  }

  Matrix energies(n_frames, cfg.n_mel_filters);
  std::vector<std::complex<double>> buf(fft_size);
  std::vector<double> power(n_bins);
  for (size_t t = 0; t < n_frames; ++t) {
    std::fill(buf.begin(), buf.end(), std::complex<double>{});
    for (size_t n = 0; n < window; ++n) {
      buf[n] = emphasized.samples[t * hop + n] * hamming[n];
    }
    fft_inplace(buf);
    for (size_t k = 0; k < n_bins; ++k) power[k] = std::norm(buf[k]);
    auto out = energies.row(t);
    for (int m = 0; m < cfg.n_mel_filters; ++m) {
      auto weights = bank.row(m);
      double e = 0.0;
      for (size_t k = 0; k < n_bins; ++k) e += weights[k] * power[k];
      out[m] = std::log(std::max(e, kLogFloor));
    }
  }
  return energies;
}

FeatureMatrix mfcc(const AudioClip& clip, const FeatureConfig& cfg) {
  const Matrix logmel = log_mel_energies(clip, cfg);
  const size_t n = logmel.cols();
  const size_t n_out = static_cast<size_t>(cfg.n_cepstra);
  Matrix basis(n, n_out);
  for (size_t k = 0; k < n_out; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    for (size_t i = 0; i < n; ++i) {
      basis(i, k) = scale * std::cos(std::numbers::pi * k * (2.0 * i + 1.0) / (2.0 * n));
    }
  }
  return matmul(logmel, basis);
}

FeatureMatrix stack_context(const FeatureMatrix& feats, size_t radius) {
  const size_t width = feats.cols();
  const size_t span = 2 * radius + 1;
  const auto frames = static_cast<std::ptrdiff_t>(feats.rows());
  Matrix out(feats.rows(), width * span);
  for (std::ptrdiff_t t = 0; t < frames; ++t) {
    auto dst = out.row(static_cast<size_t>(t));
    for (size_t j = 0; j < span; ++j) {
      const std::ptrdiff_t src = t - static_cast<std::ptrdiff_t>(radius) +
                                 static_cast<std::ptrdiff_t>(j);
      if (src < 0 || src >= frames) continue;
      auto from = feats.row(static_cast<size_t>(src));
      std::copy(from.begin(), from.end(), dst.begin() + j * width);
    }
  }
  return out;
}

FeatureMatrix featurize(const AudioClip& clip, const FeatureConfig& cfg) {
  return stack_context(mfcc(clip, cfg), static_cast<size_t>(cfg.context_radius));
}

}  // namespace asrz
