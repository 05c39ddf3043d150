// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "asrz/decoder.hpp"
#include "asrz/features.hpp"

namespace asrz {

// UTF-8 "key=value" lines; '#' starts a comment line. Throws MalformedConfig.
std::map<std::string, std::string> parse_key_values(std::string_view text);

struct TrainConfig {
  size_t batch_size = 24;
  double lr = 0.0005;
  double dropout = 0.4;
  size_t epochs = 30;
  uint64_t seed = 1;
  size_t hidden = 64;
  double relu_cap = 20.0;
  FeatureConfig features;

  std::filesystem::path alphabet;
  std::filesystem::path train_manifest;
  std::filesystem::path val_manifest;
  std::filesystem::path test_manifest;
  std::filesystem::path out_dir;
  std::filesystem::path lm;  // optional, used when the suite evaluates

  DecodeParams decode;
  // 0 keeps every epoch checkpoint; k > 0 keeps the k best by validation loss.
  size_t keep_checkpoints = 0;

  void validate() const;
};

// Relative paths are resolved against `base_dir`. Unknown keys are rejected.
TrainConfig parse_train_config(std::string_view text, const std::filesystem::path& base_dir);
TrainConfig load_train_config(const std::filesystem::path& path);
// Every field, one per line, paths absolute; parse_train_config reads it back.
std::string to_config_text(const TrainConfig& cfg);

}  // namespace asrz
