// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "asrz/numerics.hpp"

namespace asrz {

inline constexpr int kSampleRate = 16000;

struct AudioClip {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = kSampleRate;
};

struct FeatureConfig {
  double window_ms = 32.0;
  double hop_ms = 20.0;
  int n_mel_filters = 26;
  int n_cepstra = 26;
  double preemphasis = 0.97;
  int context_radius = 9;

  size_t window_samples() const;
  size_t hop_samples() const;
  // Width of a context-stacked frame: n_cepstra * (2 * radius + 1).
  size_t stacked_width() const;
  // Throws InvalidArgument when an invariant is violated.
  void validate() const;

  bool operator==(const FeatureConfig&) const = default;
};

// Rows are frames, columns are coefficients.
using FeatureMatrix = Matrix;

AudioClip preemphasize(const AudioClip& clip, double k);

// In-place iterative radix-2 Cooley-Tukey; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& data);
size_t next_power_of_two(size_t n);

double hz_to_mel(double hz);
double mel_to_hz(double mel);
// Center frequencies (Hz) of the triangular filters.
std::vector<double> mel_filter_centers(int n_filters, int sample_rate);
// n_filters × (fft_size/2 + 1) triangular weights over 0 Hz .. Nyquist.
Matrix mel_filterbank(int n_filters, size_t fft_size, int sample_rate);

size_t frame_count(size_t n_samples, const FeatureConfig& cfg);

// Log filterbank energies (floor 1e-10) before the DCT, T × n_mel_filters.
Matrix log_mel_energies(const AudioClip& clip, const FeatureConfig& cfg);
// T × n_cepstra orthonormal DCT-II of the log-mel energies.
FeatureMatrix mfcc(const AudioClip& clip, const FeatureConfig& cfg);
// Frame t becomes frames t-radius .. t+radius concatenated; zeros past the edges.
FeatureMatrix stack_context(const FeatureMatrix& feats, size_t radius);
// mfcc followed by stack_context with the configured radius.
FeatureMatrix featurize(const AudioClip& clip, const FeatureConfig& cfg);

}  // namespace asrz
