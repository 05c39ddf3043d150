// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

#include "asrz/alphabet.hpp"
#include "asrz/numerics.hpp"

namespace asrz {

// Connectionist temporal classification over T×C log-probabilities whose
// last column is the blank.

struct CtcResult {
  double loss = 0.0;  // -ln P(target | logprobs)
  Matrix dlogprobs;   // ∂loss/∂logprobs, T×C
};

// Merge adjacent repeats, then drop blanks.
Labeling collapse(std::span<const int> path, int blank);

// Minimum number of frames a target needs: its length plus one separating
// blank for every adjacent equal pair.
size_t min_frames(const Labeling& target);
bool is_feasible(const Labeling& target, size_t frames);

// Log-space alpha/beta recursion over the blank-interleaved target.
// Throws AlphabetMismatch if a target label is >= blank, TargetInfeasible if
// the target needs more frames than available.
CtcResult ctc_forward_backward(const Matrix& logprobs, const Labeling& target);
// Loss only (alpha pass).
double ctc_loss(const Matrix& logprobs, const Labeling& target);

inline constexpr uint64_t kMaxEnumeratedPaths = 1'000'000;

// Explicit enumeration of all C^T paths over probabilities `probs`. Throws
// TooLargeToEnumerate beyond kMaxEnumeratedPaths and TargetInfeasible when
// no path collapses to `target`.
double ctc_oracle(const Matrix& probs, const Labeling& target);

}  // namespace asrz
