// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "asrz/alphabet.hpp"
#include "asrz/features.hpp"
#include "asrz/model.hpp"

namespace asrz {

inline constexpr char kCheckpointMagic[4] = {'A', 'S', 'R', 'Z'};
inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  Alphabet alphabet;
  FeatureConfig features;
  int64_t epoch = 0;
  double val_loss = 0.0;
};

struct Checkpoint {
  ModelParams params;
  CheckpointMeta meta;
};

// Layout (all integers little-endian):
//   "ASRZ" | u32 version
//   u32 metadata length | UTF-8 "key=value\n" lines (dims, alphabet,
//                         feature config, epoch, val_loss)
//   per tensor: u16 name length | name | u8 rank | u64 dims[rank] |
//               binary32 payload, row-major
// Weights are rank 2, biases rank 1. Tensors run to end of file.
std::string serialize_checkpoint(const ModelParams& params, const CheckpointMeta& meta);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const ModelParams& params, const CheckpointMeta& meta,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rounds every tensor to binary32, i.e. the values a save/load roundtrip yields.
ModelParams quantize_to_f32(const ModelParams& params);

// Replaces layer 6 by a freshly Glorot-initialized H×(|alphabet|+1) layer with
// zero bias. Layers 1-5 are copied bit for bit. Always reinitializes.
ModelParams remap_output_layer(const ModelParams& params, const Alphabet& target,
                               Rng& rng);

}  // namespace asrz
