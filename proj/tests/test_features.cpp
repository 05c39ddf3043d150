// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>

#include "asrz/error.hpp"
#include "asrz/features.hpp"
#include "doctest.h"

using asrz::AudioClip;
using asrz::FeatureConfig;

namespace {

AudioClip tone(double hz, double seconds, double amplitude = 0.5) {
  AudioClip clip;
  const auto n = static_cast<size_t>(seconds * asrz::kSampleRate);
  for (size_t i = 0; i < n; ++i) {
    clip.samples.push_back(amplitude *
                           std::sin(2.0 * std::numbers::pi * hz * i / asrz::kSampleRate));
  }
  return clip;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("preemphasis examples") {
  AudioClip ones{{1.0, 1.0, 1.0}};
  const auto y = asrz::preemphasize(ones, 0.97);
  CHECK(y.samples[0] == 1.0);
  CHECK(y.samples[1] == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(y.samples[2] == doctest::Approx(0.03).epsilon(1e-12));

  AudioClip alt{{1.0, -1.0, 1.0, -1.0}};
  CHECK(asrz::preemphasize(alt, 0.0).samples == alt.samples);
  const auto z = asrz::preemphasize(alt, 0.97);
  CHECK(z.samples[1] == doctest::Approx(-1.97));
  CHECK(z.samples[2] == doctest::Approx(1.97));
  CHECK(z.samples[3] == doctest::Approx(-1.97));
}

TEST_CASE("fft of a unit impulse is flat") {
  std::vector<std::complex<double>> data(8);
  data[0] = 1.0;
  asrz::fft_inplace(data);
  for (const auto& v : data) CHECK(std::abs(v - std::complex<double>(1.0, 0.0)) < 1e-12);
}

TEST_CASE("fft matches a direct DFT") {
  asrz::Rng rng(2);
  std::vector<std::complex<double>> data(16);
  for (auto& v : data) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  auto fast = data;
  asrz::fft_inplace(fast);
  for (size_t k = 0; k < data.size(); ++k) {
    std::complex<double> s = 0.0;
    for (size_t n = 0; n < data.size(); ++n) {
      s += data[n] * std::polar(1.0, -2.0 * std::numbers::pi * k * n / data.size());
    }
    CHECK(std::abs(s - fast[k]) < 1e-10);
  }
}

TEST_CASE("one second at the defaults gives 49 frames") {
  const FeatureConfig cfg;
  CHECK(cfg.window_samples() == 512);
  CHECK(cfg.hop_samples() == 320);
  CHECK(asrz::frame_count(16000, cfg) == 49);
  const auto m = asrz::mfcc(tone(300.0, 1.0), cfg);
  CHECK(m.rows() == 49);
  CHECK(m.cols() == 26);
}

TEST_CASE("digital silence produces identical frames at the energy floor") {
  const FeatureConfig cfg;
  AudioClip silence{std::vector<double>(16000, 0.0)};
  const auto e = asrz::log_mel_energies(silence, cfg);
  for (double v : e.values()) CHECK(v == doctest::Approx(std::log(1e-10)));
  const auto m = asrz::mfcc(silence, cfg);
  for (size_t t = 1; t < m.rows(); ++t) {
    for (size_t j = 0; j < m.cols(); ++j) CHECK(m(t, j) == m(0, j));
  }
}

TEST_CASE("a 440 Hz tone peaks in the filter centered nearest 440 Hz") {
  const FeatureConfig cfg;
  const auto centers = asrz::mel_filter_centers(cfg.n_mel_filters, asrz::kSampleRate);
  size_t nearest = 0;
  for (size_t m = 1; m < centers.size(); ++m) {
    if (std::abs(centers[m] - 440.0) < std::abs(centers[nearest] - 440.0)) nearest = m;
  }
  // Independent numpy computation of the same pipeline puts the peak in
  // filter 4 (center ≈ 416 Hz).
  CHECK(nearest == 4);
  const auto e = asrz::log_mel_energies(tone(440.0, 0.5), cfg);
  for (size_t t = 2; t + 2 < e.rows(); ++t) {
    size_t best = 0;
    for (size_t m = 1; m < e.cols(); ++m) {
      if (e(t, m) > e(t, best)) best = m;
    }
    CHECK(best == nearest);
  }
}

TEST_CASE("mel scale roundtrip and filter partition") {
  for (double hz : {0.0, 100.0, 1000.0, 8000.0}) {
    CHECK(asrz::mel_to_hz(asrz::hz_to_mel(hz)) == doctest::Approx(hz).epsilon(1e-12));
  }
  CHECK(asrz::hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  const auto bank = asrz::mel_filterbank(26, 512, asrz::kSampleRate);
  CHECK(bank.rows() == 26);
  CHECK(bank.cols() == 257);
  for (double w : bank.values()) CHECK((w >= 0.0 && w <= 1.0));
}

TEST_CASE("scaling the amplitude only moves c0") {
  const FeatureConfig cfg;
  const auto quiet = asrz::mfcc(tone(700.0, 0.5, 0.1), cfg);
  const auto loud = asrz::mfcc(tone(700.0, 0.5, 0.4), cfg);
  // ×4 amplitude = ×16 power = +ln 16 on every log-mel energy; the
  // orthonormal DCT maps a constant offset to c0 only.
  const double expected = std::log(16.0) * std::sqrt(static_cast<double>(cfg.n_mel_filters));
  for (size_t t = 0; t < quiet.rows(); ++t) {
    CHECK(loud(t, 0) - quiet(t, 0) == doctest::Approx(expected).epsilon(1e-8));
    for (size_t j = 1; j < quiet.cols(); ++j) CHECK(std::abs(loud(t, j) - quiet(t, j)) <= 1e-8);
  }
}

TEST_CASE("mfcc is deterministic") {
  const FeatureConfig cfg;
  asrz::Rng rng(5);
  AudioClip noise;
  for (int i = 0; i < 8000; ++i) noise.samples.push_back(rng.uniform(-0.5, 0.5));
  CHECK(asrz::featurize(noise, cfg) == asrz::featurize(noise, cfg));
}

TEST_CASE("input validation") {
  FeatureConfig cfg;
  AudioClip shorty{std::vector<double>(100, 0.0)};
  CHECK_THROWS_AS(asrz::mfcc(shorty, cfg), asrz::Error);
  AudioClip wrong = tone(300.0, 0.5);
  wrong.sample_rate = 8000;
  try {
    asrz::mfcc(wrong, cfg);
    FAIL("expected WrongSampleRate");
  } catch (const asrz::Error& e) {
    CHECK(e.code() == asrz::ErrorCode::WrongSampleRate);
  }
  cfg.n_cepstra = 40;
  CHECK_THROWS_AS(cfg.validate(), asrz::Error);
}

TEST_CASE("stack_context examples") {
  const asrz::Matrix f{{1.0, 2.0}, {3.0, 4.0}};
  CHECK(asrz::stack_context(f, 0) == f);
  const asrz::Matrix one{{5.0, 6.0}};
  CHECK(asrz::stack_context(one, 1) == asrz::Matrix{{0.0, 0.0, 5.0, 6.0, 0.0, 0.0}});
  CHECK(asrz::stack_context(f, 1) == asrz::Matrix{{0, 0, 1, 2, 3, 4}, {1, 2, 3, 4, 0, 0}});
  const asrz::Matrix wide(49, 26, 1.0);
  const auto s = asrz::stack_context(wide, 9);
  CHECK(s.rows() == 49);
  CHECK(s.cols() == 494);
  const FeatureConfig cfg;
  CHECK(cfg.stacked_width() == 494);
}

}  // TEST_SUITE
