// SPDX-License-Identifier: Apache-2.0
#include "asrz/optim.hpp"

#include <cctype>
#include <cmath>

#include "asrz/error.hpp"

namespace asrz {

std::string_view method_name(FreezePlan plan) {
  switch (plan) {
    case FreezePlan::Reference: return "Reference";
    case FreezePlan::F0: return "0 Frozen Layers";
    case FreezePlan::F1: return "1 Frozen Layer";
    case FreezePlan::F2: return "2 Frozen Layers";
    case FreezePlan::F3: return "3 Frozen Layers";
    case FreezePlan::F4: return "4 Frozen Layers";
  }
  throw Error(ErrorCode::UnknownPlan, "invalid plan value");
}

std::string_view plan_slug(FreezePlan plan) {
  switch (plan) {
    case FreezePlan::Reference: return "reference";
    case FreezePlan::F0: return "freeze0";
    case FreezePlan::F1: return "freeze1";
    case FreezePlan::F2: return "freeze2";
    case FreezePlan::F3: return "freeze3";
    case FreezePlan::F4: return "freeze4";
  }
  throw Error(ErrorCode::UnknownPlan, "invalid plan value");
}

FreezePlan plan_from_frozen_count(int frozen) {
  switch (frozen) {
    case 0: return FreezePlan::F0;
    case 1: return FreezePlan::F1;
    case 2: return FreezePlan::F2;
    case 3: return FreezePlan::F3;
    case 4: return FreezePlan::F4;
    default:
      throw Error(ErrorCode::UnknownPlan,
                  "frozen layer count must be 0..4, got " + std::to_string(frozen));
  }
}

FreezePlan parse_plan(std::string_view text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "reference") return FreezePlan::Reference;
  if (lower.size() == 1 && lower[0] >= '0' && lower[0] <= '4') {
    return plan_from_frozen_count(lower[0] - '0');
  }
  if (lower.size() == 2 && lower[0] == 'f' && lower[1] >= '0' && lower[1] <= '4') {
    return plan_from_frozen_count(lower[1] - '0');
  }
  for (FreezePlan p : kAllPlans) {
    if (text == method_name(p) || lower == plan_slug(p)) return p;
  }
  throw Error(ErrorCode::UnknownPlan, "unknown freeze plan '" + std::string(text) + "'");
}

bool uses_source_weights(FreezePlan plan) { return plan != FreezePlan::Reference; }

FreezeMask build_freeze_mask(FreezePlan plan) {
  FreezeMask mask;
  auto freeze = [&mask](std::initializer_list<int> layers) {
    for (int l : layers) mask.trainable[static_cast<size_t>(l - 1)] = false;
  };
  switch (plan) {
    case FreezePlan::Reference:
    case FreezePlan::F0: break;
    case FreezePlan::F1: freeze({1}); break;
    case FreezePlan::F2: freeze({1, 2}); break;
    case FreezePlan::F3: freeze({1, 2, 3}); break;
    case FreezePlan::F4: freeze({1, 2, 3, 5}); break;
    default: throw Error(ErrorCode::UnknownPlan, "invalid plan value");
  }
  return mask;
}

size_t trainable_parameter_count(const ModelDims& dims, const FreezeMask& mask) {
  size_t n = 0;
  for (int k = 1; k <= kNumLayers; ++k) {
    if (mask.is_trainable(k)) n += layer_parameter_count(dims, k);
  }
  return n;
}

void AdamHyper::validate() const {
  if (!(lr > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
      !(epsilon > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "Adam requires lr > 0, 0 <= beta < 1, eps > 0");
  }
}

AdamState AdamState::zeros(const ModelDims& dims) {
  return AdamState{ModelParams::zeros(dims), ModelParams::zeros(dims), 0};
}

namespace {

void update_tensor(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v,
                   const AdamHyper& h, double correction1, double correction2) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() ||
      param.rows() != m.rows() || param.cols() != m.cols() || param.rows() != v.rows() ||
      param.cols() != v.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "adam_step tensor shapes disagree");
  }
  auto p = param.values();
  auto g = grad.values();
  auto mv = m.values();
  auto vv = v.values();
  for (size_t i = 0; i < p.size(); ++i) {
    mv[i] = h.beta1 * mv[i] + (1.0 - h.beta1) * g[i];
    vv[i] = h.beta2 * vv[i] + (1.0 - h.beta2) * g[i] * g[i];
    const double m_hat = mv[i] / correction1;
    const double v_hat = vv[i] / correction2;
    p[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
  }
}

}  // namespace

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state,
               const AdamHyper& hyper, const FreezeMask& mask) {
  hyper.validate();
  if (!(params.dims == grads.dims) || !(params.dims == state.m.dims) ||
      !(params.dims == state.v.dims)) {
    throw Error(ErrorCode::DimensionMismatch, "adam_step dims disagree");
  }
  state.step += 1;
  // pow() of a number in [0,1) underflows towards 0 for huge step counts,
  // which is the correct limit of the bias correction.
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);
  for (int k = 1; k <= kNumLayers; ++k) {
    if (!mask.is_trainable(k)) continue;
    update_tensor(params.layer(k).weight, grads.layer(k).weight, state.m.layer(k).weight,
                  state.v.layer(k).weight, hyper, correction1, correction2);
    update_tensor(params.layer(k).bias, grads.layer(k).bias, state.m.layer(k).bias,
                  state.v.layer(k).bias, hyper, correction1, correction2);
  }
}

}  // namespace asrz
