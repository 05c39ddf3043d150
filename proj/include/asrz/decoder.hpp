// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "asrz/alphabet.hpp"
#include "asrz/lm.hpp"
#include "asrz/numerics.hpp"

namespace asrz {

struct DecodeParams {
  size_t beam_width = 64;
  double alpha = 0.75;  // LM weight on natural-log character probabilities
  double beta = 1.5;    // bonus per emitted character

  void validate() const;
};

struct BeamHyp {
  Labeling prefix;
  double log_p_blank = 0.0;
  double log_p_nonblank = 0.0;
  double lm_log_prob = 0.0;  // natural log, characters only
  double score = 0.0;        // ln(p_b + p_nb) + alpha·lm + beta·|prefix|
};

struct DecodeResult {
  Labeling labels;
  std::u32string text;
  double score = 0.0;  // combined score, including the end-of-sentence LM term
};

// Per-frame argmax (ties → lowest index), then collapse.
DecodeResult greedy_decode(const Matrix& logprobs, const Alphabet& alphabet);

// CTC prefix beam search. With an LM, every extension by character c adds
// alpha·ln p(c | <s> prefix) + beta; the final ranking also adds
// alpha·ln p(</s> | <s> prefix). Without an LM only beta applies. Pruning
// keeps the beam_width best prefixes per frame, ties broken by the
// lexicographically smaller label sequence. Throws VocabularyMismatch when an
// alphabet character is unknown to the LM.
DecodeResult beam_decode(const Matrix& logprobs, const NGramLM* lm, const DecodeParams& params,
                         const Alphabet& alphabet);

// Exhaustive search over every label sequence of length <= T, scored as
// ln P_ctc(s) + alpha·ln P_lm(s </s>) + beta·|s|. Throws TooLargeToEnumerate
// when (|alphabet|+1)^T exceeds 10^6.
DecodeResult oracle_decode(const Matrix& logprobs, const NGramLM* lm, const DecodeParams& params,
                           const Alphabet& alphabet);

}  // namespace asrz
