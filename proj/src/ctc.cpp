// SPDX-License-Identifier: Apache-2.0
#include "asrz/ctc.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "asrz/error.hpp"

namespace asrz {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_target(const Matrix& logprobs, const Labeling& target) {
  if (logprobs.cols() < 2) {
    throw Error(ErrorCode::DimensionMismatch, "CTC needs at least one label plus blank");
  }
  const int blank = static_cast<int>(logprobs.cols()) - 1;
  for (int l : target) {
    if (l < 0 || l >= blank) {
      throw Error(ErrorCode::AlphabetMismatch,
                  "target label " + std::to_string(l) + " outside [0, " +
                      std::to_string(blank) + ")");
    }
  }
  if (!is_feasible(target, logprobs.rows())) {
    throw Error(ErrorCode::TargetInfeasible,
                "target needs " + std::to_string(min_frames(target)) + " frames, have " +
                    std::to_string(logprobs.rows()));
  }
}

// Label of position s in the blank-interleaved sequence.
int extended_label(const Labeling& target, size_t s, int blank) {
  return s % 2 == 0 ? blank : target[s / 2];
}

bool can_skip(const Labeling& target, size_t s, int blank) {
  return s >= 2 && s % 2 == 1 && extended_label(target, s, blank) != extended_label(target, s - 2, blank);
}

Matrix alpha_pass(const Matrix& logprobs, const Labeling& target) {
  const int blank = static_cast<int>(logprobs.cols()) - 1;
  const size_t frames = logprobs.rows();
  const size_t positions = 2 * target.size() + 1;
  Matrix alpha(frames, positions, kNegInf);
  alpha(0, 0) = logprobs(0, blank);
  if (positions > 1) alpha(0, 1) = logprobs(0, target[0]);
  for (size_t t = 1; t < frames; ++t) {
    for (size_t s = 0; s < positions; ++s) {
      double acc = alpha(t - 1, s);
      if (s >= 1) acc = log_add(acc, alpha(t - 1, s - 1));
      if (can_skip(target, s, blank)) acc = log_add(acc, alpha(t - 1, s - 2));
      alpha(t, s) = acc == kNegInf ? kNegInf
                                   : acc + logprobs(t, extended_label(target, s, blank));
    }
  }
  return alpha;
}

double final_log_prob(const Matrix& alpha) {
  const size_t last = alpha.rows() - 1;
  const size_t positions = alpha.cols();
  double lp = alpha(last, positions - 1);
  if (positions > 1) lp = log_add(lp, alpha(last, positions - 2));
  return lp;
}

}  // namespace

Labeling collapse(std::span<const int> path, int blank) {
  Labeling out;
  int prev = -1;
  for (int l : path) {
    if (l != prev && l != blank) out.push_back(l);
    prev = l;
  }
  return out;
}

size_t min_frames(const Labeling& target) {
  size_t n = target.size();
  for (size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

bool is_feasible(const Labeling& target, size_t frames) {
  return frames >= 1 && frames >= min_frames(target);
}

double ctc_loss(const Matrix& logprobs, const Labeling& target) {
  check_target(logprobs, target);
  return -final_log_prob(alpha_pass(logprobs, target));
}

CtcResult ctc_forward_backward(const Matrix& logprobs, const Labeling& target) {
  check_target(logprobs, target);
  const int blank = static_cast<int>(logprobs.cols()) - 1;
  const size_t frames = logprobs.rows();
  const size_t positions = 2 * target.size() + 1;

  const Matrix alpha = alpha_pass(logprobs, target);
  const double log_p = final_log_prob(alpha);

  // beta(t, s): log-probability of emitting the rest of the target from
  // frame t+1 on, given position s at frame t (frame t's emission excluded).
  Matrix beta(frames, positions, kNegInf);
  beta(frames - 1, positions - 1) = 0.0;
  if (positions > 1) beta(frames - 1, positions - 2) = 0.0;
  for (size_t t = frames - 1; t-- > 0;) {
    for (size_t s = 0; s < positions; ++s) {
      double acc = beta(t + 1, s) + logprobs(t + 1, extended_label(target, s, blank));
      if (s + 1 < positions) {
        acc = log_add(acc, beta(t + 1, s + 1) +
                               logprobs(t + 1, extended_label(target, s + 1, blank)));
      }
      if (s + 2 < positions && can_skip(target, s + 2, blank)) {
        acc = log_add(acc, beta(t + 1, s + 2) +
                               logprobs(t + 1, extended_label(target, s + 2, blank)));
      }
      beta(t, s) = acc;
    }
  }

  CtcResult result;
  result.loss = -log_p;
  result.dlogprobs = Matrix(frames, logprobs.cols());
  std::vector<double> occupancy(logprobs.cols());
  for (size_t t = 0; t < frames; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kNegInf);
    for (size_t s = 0; s < positions; ++s) {
      const int label = extended_label(target, s, blank);
      occupancy[label] = log_add(occupancy[label], alpha(t, s) + beta(t, s));
    }
    auto out = result.dlogprobs.row(t);
    for (size_t k = 0; k < out.size(); ++k) {
      out[k] = occupancy[k] == kNegInf ? 0.0 : -std::exp(occupancy[k] - log_p);
    }
  }
  return result;
}

double ctc_oracle(const Matrix& probs, const Labeling& target) {
  const size_t frames = probs.rows();
  const size_t classes = probs.cols();
  if (classes < 2 || frames == 0) {
    throw Error(ErrorCode::DimensionMismatch, "oracle needs T >= 1 and C >= 2");
  }
  uint64_t total_paths = 1;
  for (size_t t = 0; t < frames; ++t) {
    total_paths *= classes;
    if (total_paths > kMaxEnumeratedPaths) {
      throw Error(ErrorCode::TooLargeToEnumerate,
                  std::to_string(classes) + "^" + std::to_string(frames) + " paths");
    }
  }
  const int blank = static_cast<int>(classes) - 1;
  std::vector<int> path(frames, 0);
  double total = 0.0;
  bool reachable = false;
  for (uint64_t code = 0; code < total_paths; ++code) {
    uint64_t rest = code;
    double p = 1.0;
    for (size_t t = 0; t < frames; ++t) {
      path[t] = static_cast<int>(rest % classes);
      rest /= classes;
      p *= probs(t, path[t]);
    }
    if (collapse(path, blank) == target) {
      reachable = true;
      total += p;
    }
  }
  if (!reachable) {
    throw Error(ErrorCode::TargetInfeasible, "no path collapses to the target");
  }
  return -std::log(total);
}

}  // namespace asrz
