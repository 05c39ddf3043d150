// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asrz/alphabet.hpp"
#include "asrz/features.hpp"

namespace asrz {

// RFC 4180 records: comma separated, CRLF or LF terminated, double-quoted
// fields with "" escapes. Throws MalformedCsv.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_field(std::string_view value);

struct ManifestRow {
  std::filesystem::path audio;  // resolved against the manifest directory
  std::string transcript;       // UTF-8
  Labeling labels;
  size_t row = 0;               // CSV record number, header = 1
};

struct Manifest {
  std::filesystem::path source;
  std::vector<ManifestRow> rows;
};

// CSV with header "path,transcript". Throws MalformedCsv, MissingAudioFile,
// InvalidTranscriptChar (naming the character and row) and Io.
Manifest parse_manifest(const std::filesystem::path& path, const Alphabet& alphabet);
void write_manifest(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, std::string>>& rows);

// RIFF/WAVE, 16-bit little-endian PCM, mono, 16 kHz; samples scaled by 1/32768.
// Throws UnsupportedFormat naming the offending property (encoding, channels,
// rate, bit depth) and MalformedRiff for structural problems.
AudioClip decode_wav(std::string_view bytes);
AudioClip load_wav(const std::filesystem::path& path);
// Writes 16-bit PCM; samples are clipped to [-1, 1).
std::string encode_wav(const AudioClip& clip, int channels = 1, int bits = 16);
void save_wav(const std::filesystem::path& path, const AudioClip& clip);

struct Utterance {
  size_t id = 0;  // position in the manifest
  std::string transcript;
  Labeling labels;
  FeatureMatrix features;
  size_t n_samples = 0;
};

struct Dataset {
  std::vector<Utterance> utterances;
  FeatureConfig features;
};

// Loads and featurizes every clip. Throws TargetInfeasible when a transcript
// cannot fit into its clip's frame count.
Dataset load_dataset(const Manifest& manifest, const FeatureConfig& cfg);

struct Batch {
  std::vector<size_t> ids;
  std::vector<FeatureMatrix> features;  // each zero-padded to max_frames rows
  std::vector<size_t> lengths;          // true frame counts
  std::vector<Labeling> targets;
  size_t max_frames = 0;

  size_t size() const { return ids.size(); }
};

// Stable sort by duration, contiguous buckets of batch_size, bucket order
// shuffled with a generator seeded from (seed, epoch).
std::vector<std::vector<size_t>> plan_batches(std::span<const size_t> durations,
                                              size_t batch_size, uint64_t seed, size_t epoch);
std::vector<Batch> make_batches(const Dataset& data, size_t batch_size, uint64_t seed,
                                size_t epoch);

}  // namespace asrz
