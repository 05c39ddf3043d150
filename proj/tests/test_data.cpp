// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "asrz/data.hpp"
#include "asrz/error.hpp"
#include "asrz/harness.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

asrz::ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const asrz::Error& e) {
    return e.code();
  }
  FAIL("expected an asrz::Error");
  return asrz::ErrorCode::InvalidArgument;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("asrz_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

asrz::AudioClip sine(size_t n, double hz) {
  asrz::AudioClip c;
  for (size_t i = 0; i < n; ++i) {
    c.samples.push_back(0.3 * std::sin(2 * std::numbers::pi * hz * i / asrz::kSampleRate));
  }
  return c;
}

// Patches the little-endian u16/u32 at `offset` of a canonical 44-byte header.
std::string patch(std::string wav, size_t offset, uint32_t value, size_t width) {
  std::memcpy(wav.data() + offset, &value, width);
  return wav;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("csv parsing follows RFC 4180 quoting") {
  const auto rows = asrz::parse_csv("a,b\r\n\"x,y\",\"say \"\"hi\"\"\"\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][0] == "x,y");
  CHECK(rows[1][1] == "say \"hi\"");
  CHECK(asrz::parse_csv("\xEF\xBB\xBFpath,transcript\n")[0][0] == "path");
  CHECK(code_of([] { asrz::parse_csv("\"open\n"); }) == asrz::ErrorCode::MalformedCsv);
  CHECK(asrz::csv_field("plain") == "plain");
  CHECK(asrz::csv_field("a,b") == "\"a,b\"");
}

TEST_CASE("manifest parsing") {
  TempDir dir("manifest");
  asrz::save_wav(dir.path / "clip1.wav", sine(1600, 440));
  const auto alphabet = asrz::Alphabet::from_utf8("abcdefghijklmnopqrstuvwxyz ");
  write(dir.path / "ok.csv", "path,transcript\nclip1.wav,\"hallo welt\"\n");
  const auto m = asrz::parse_manifest(dir.path / "ok.csv", alphabet);
  REQUIRE(m.rows.size() == 1);
  CHECK(m.rows[0].transcript == "hallo welt");
  CHECK(m.rows[0].audio == dir.path / "clip1.wav");
  CHECK(m.rows[0].row == 2);

  write(dir.path / "digit.csv", "path,transcript\nclip1.wav,abc7\n");
  try {
    asrz::parse_manifest(dir.path / "digit.csv", alphabet);
    FAIL("expected InvalidTranscriptChar");
  } catch (const asrz::Error& e) {
    CHECK(e.code() == asrz::ErrorCode::InvalidTranscriptChar);
    const std::string what = e.what();
    CHECK(what.find("row 2") != std::string::npos);
    CHECK(what.find("'7'") != std::string::npos);
  }
  write(dir.path / "nohead.csv", "clip1.wav,hallo\n");
  CHECK(code_of([&] { asrz::parse_manifest(dir.path / "nohead.csv", alphabet); }) ==
        asrz::ErrorCode::MalformedCsv);
  write(dir.path / "missing.csv", "path,transcript\nnope.wav,hallo\n");
  CHECK(code_of([&] { asrz::parse_manifest(dir.path / "missing.csv", alphabet); }) ==
        asrz::ErrorCode::MissingAudioFile);

  asrz::write_manifest(dir.path / "written.csv", {{"clip1.wav", "a, b"}});
  CHECK(asrz::parse_manifest(dir.path / "written.csv", asrz::Alphabet::from_utf8("ab ,"))
            .rows[0]
            .transcript == "a, b");
}

TEST_CASE("wav decoding") {
  const auto one_second = asrz::decode_wav(asrz::encode_wav(sine(16000, 440)));
  CHECK(one_second.samples.size() == 16000);
  CHECK(one_second.sample_rate == 16000);
  // 16-bit quantization error is at most half a step.
  const auto original = sine(16000, 440);
  for (size_t i = 0; i < 16000; ++i) {
    CHECK(std::abs(one_second.samples[i] - original.samples[i]) <= 0.5 / 32768.0 + 1e-12);
  }

  const std::string good = asrz::encode_wav(sine(100, 440));
  auto message = [](auto&& fn) {
    try {
      fn();
    } catch (const asrz::Error& e) {
      CHECK(e.code() == asrz::ErrorCode::UnsupportedFormat);
      return std::string(e.what());
    }
    FAIL("expected UnsupportedFormat");
    return std::string();
  };
  CHECK(message([&] { asrz::decode_wav(patch(good, 24, 44100, 4)); }).find("rate") !=
        std::string::npos);
  CHECK(message([&] { asrz::decode_wav(asrz::encode_wav(sine(100, 440), 2)); }).find("channels") !=
        std::string::npos);
  CHECK(message([&] { asrz::decode_wav(asrz::encode_wav(sine(100, 440), 1, 8)); })
            .find("bit depth") != std::string::npos);
  CHECK(code_of([&] { asrz::decode_wav(good.substr(0, 30)); }) == asrz::ErrorCode::MalformedRiff);
  CHECK(code_of([] { asrz::decode_wav("RIFX"); }) == asrz::ErrorCode::MalformedRiff);
}

TEST_CASE("batch planning") {
  std::vector<size_t> durations(50, 1000);
  const auto plan = asrz::plan_batches(durations, 24, 1, 1);
  REQUIRE(plan.size() == 3);
  std::multiset<size_t> sizes;
  for (const auto& b : plan) sizes.insert(b.size());
  CHECK(sizes == std::multiset<size_t>{2, 24, 24});
  // Equal durations: buckets are consecutive manifest rows.
  for (const auto& b : plan) {
    for (size_t i = 1; i < b.size(); ++i) CHECK(b[i] == b[i - 1] + 1);
    CHECK(b[0] % 24 == 0);
  }
  CHECK(asrz::plan_batches(durations, 24, 1, 1) == plan);
  CHECK(code_of([&] { asrz::plan_batches(durations, 0, 1, 1); }) ==
        asrz::ErrorCode::InvalidArgument);
}

TEST_CASE("every epoch covers the manifest exactly once") {
  asrz::Rng rng(91);
  std::vector<size_t> durations(37);
  for (auto& d : durations) d = 1000 + rng.below(5000);
  std::set<std::vector<std::vector<size_t>>> orders;
  for (size_t epoch = 1; epoch <= 6; ++epoch) {
    const auto plan = asrz::plan_batches(durations, 8, 5, epoch);
    std::vector<size_t> seen;
    for (const auto& b : plan) {
      seen.insert(seen.end(), b.begin(), b.end());
      // Buckets hold utterances of neighbouring lengths.
      for (size_t i = 1; i < b.size(); ++i) CHECK(durations[b[i - 1]] <= durations[b[i]]);
    }
    std::sort(seen.begin(), seen.end());
    for (size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == i);
    orders.insert(plan);
  }
  CHECK(orders.size() > 1);
}

TEST_CASE("loaded batches are padded but losses ignore the padding") {
  TempDir dir("batches");
  const auto alphabet = asrz::Alphabet::from_utf8("ab");
  std::vector<std::pair<std::string, std::string>> rows;
  const std::vector<size_t> lengths{4000, 6400, 5200, 8000};
  for (size_t i = 0; i < lengths.size(); ++i) {
    const std::string name = "u" + std::to_string(i) + ".wav";
    asrz::save_wav(dir.path / name, sine(lengths[i], 300.0 + 100.0 * i));
    rows.emplace_back(name, i % 2 ? "ab" : "ba");
  }
  asrz::write_manifest(dir.path / "m.csv", rows);
  asrz::FeatureConfig cfg;
  cfg.n_cepstra = 8;
  cfg.context_radius = 1;
  const auto data = asrz::load_dataset(asrz::parse_manifest(dir.path / "m.csv", alphabet), cfg);
  CHECK(asrz::load_dataset(asrz::parse_manifest(dir.path / "m.csv", alphabet), cfg)
            .utterances[2]
            .features == data.utterances[2].features);

  const auto batches = asrz::make_batches(data, 4, 3, 1);
  REQUIRE(batches.size() == 1);
  const auto& b = batches[0];
  for (size_t i = 0; i < b.size(); ++i) {
    CHECK(b.features[i].rows() == b.max_frames);
    CHECK(b.lengths[i] == data.utterances[b.ids[i]].features.rows());
    for (size_t t = b.lengths[i]; t < b.max_frames; ++t) {
      for (double v : b.features[i].row(t)) CHECK(v == 0.0);
    }
  }

  asrz::Rng rng(92);
  const auto params = asrz::init_params({cfg.stacked_width(), 8, alphabet.n_labels()}, rng);
  asrz::ForwardOptions opts;
  opts.mode = asrz::Mode::Train;
  opts.dropout.rate = 0.0;
  const auto batched = asrz::batch_gradients(params, b, opts, 1);
  const double alone = asrz::dataset_loss(params, data, asrz::kDefaultReluCap);
  CHECK(std::abs(batched.loss - alone) <= 1e-9);
}

}  // TEST_SUITE
