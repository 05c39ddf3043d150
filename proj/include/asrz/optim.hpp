// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "asrz/model.hpp"

namespace asrz {

// Training regimes. Reference trains from random weights; F0..F4 start from
// a source-language checkpoint and freeze a growing prefix of the network.
enum class FreezePlan { Reference, F0, F1, F2, F3, F4 };

inline constexpr std::array<FreezePlan, 6> kAllPlans = {
    FreezePlan::Reference, FreezePlan::F0, FreezePlan::F1,
    FreezePlan::F2,        FreezePlan::F3, FreezePlan::F4};

// Row labels used in result tables, e.g. "2 Frozen Layers".
std::string_view method_name(FreezePlan plan);
// Short identifier used for run directories, e.g. "freeze2".
std::string_view plan_slug(FreezePlan plan);
// Accepts "reference", "0".."4", "F0".."F4" and method names. Throws UnknownPlan.
FreezePlan parse_plan(std::string_view text);
FreezePlan plan_from_frozen_count(int frozen);
bool uses_source_weights(FreezePlan plan);

// Trainable flag per layer (weights and bias together). Index 0 is layer 1.
struct FreezeMask {
  std::array<bool, kNumLayers> trainable{true, true, true, true, true, true};

  bool is_trainable(int layer) const { return trainable.at(static_cast<size_t>(layer - 1)); }
  bool operator==(const FreezeMask&) const = default;
};

// Reference, F0: nothing frozen. F1: layer 1. F2: layers 1-2. F3: layers 1-3.
// F4: layers 1-3 and 5. The LSTM (4) and the output layer (6) always train.
FreezeMask build_freeze_mask(FreezePlan plan);
size_t trainable_parameter_count(const ModelDims& dims, const FreezeMask& mask);

struct AdamHyper {
  double lr = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  uint64_t step = 0;

  static AdamState zeros(const ModelDims& dims);
};

// One bias-corrected Adam update of every trainable layer. Frozen layers keep
// their parameters and both moments untouched; the step counter is global.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state,
               const AdamHyper& hyper, const FreezeMask& mask);

}  // namespace asrz
