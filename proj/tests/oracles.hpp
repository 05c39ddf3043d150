// SPDX-License-Identifier: Apache-2.0
// Slow, obviously-correct reference implementations used as test oracles.
// None of them share code with the library beyond the data types.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "asrz/alphabet.hpp"
#include "asrz/model.hpp"
#include "asrz/numerics.hpp"
#include "asrz/optim.hpp"

namespace oracle {

// Σ over every length-T path whose collapse equals `target` of Π probs.
// Blank is the last column.
double ctc_path_sum(const asrz::Matrix& probs, const asrz::Labeling& target);

// Plain Levenshtein recursion, exponential; keep inputs short.
template <typename T>
size_t edit_distance(std::span<const T> a, std::span<const T> b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  if (a[0] == b[0]) return edit_distance(a.subspan(1), b.subspan(1));
  const size_t sub = edit_distance(a.subspan(1), b.subspan(1));
  const size_t del = edit_distance(a.subspan(1), b);
  const size_t ins = edit_distance(a, b.subspan(1));
  return 1 + std::min({sub, del, ins});
}

// Scalar-loop forward pass in inference mode: returns T × C log-probs.
asrz::Matrix forward(const asrz::ModelParams& p, const asrz::Matrix& x, double cap);

// Central finite difference of `loss` wrt every parameter.
asrz::Gradients numeric_gradient(const asrz::ModelParams& p,
                                 const std::function<double(const asrz::ModelParams&)>& loss,
                                 double h);

// Element-by-element Adam on plain vectors, one call per step.
void adam(std::vector<double>& w, const std::vector<double>& g, std::vector<double>& m,
          std::vector<double>& v, uint64_t step, const asrz::AdamHyper& hyper);

// Every parameter flattened in layer order (weight, bias).
std::vector<double> flatten(const asrz::ModelParams& p);
void unflatten(asrz::ModelParams& p, const std::vector<double>& flat);

asrz::Matrix random_logprobs(size_t frames, size_t labels, asrz::Rng& rng, double spread = 2.0);

// Relative error with a floor on the denominator so near-zero entries are
// judged by absolute error instead.
double rel_err(double a, double b, double floor = 1e-6);

}  // namespace oracle
