// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

#include "asrz/alphabet.hpp"
#include "asrz/features.hpp"
#include "asrz/numerics.hpp"

namespace asrz {

// Toy "languages" for transfer experiments. Every character is voiced as a
// two-tone chord whose frequencies depend only on the character, so the
// characters shared by the source and target alphabets sound identical in
// both. The target alphabet is the source alphabet plus ä, ö and ü.
Alphabet synth_source_alphabet();
Alphabet synth_target_alphabet();

// (low, high) tone frequencies in Hz.
std::pair<double, double> tone_signature(char32_t ch);

// 100 ms lead-in, one ~100 ms chord per character separated by 40 ms gaps,
// 100 ms tail, Gaussian background noise. Deterministic given `rng`.
AudioClip synthesize_utterance(std::u32string_view text, Rng& rng);

struct SynthOptions {
  uint64_t seed = 7;
  size_t source_utterances = 200;
  size_t target_utterances = 100;
  size_t corpus_lines = 400;
};

struct SynthLayout {
  std::filesystem::path root;
  std::filesystem::path source_config;   // Reference-style training of the source model
  std::filesystem::path target_config;   // six-regime suite on the target language
  std::filesystem::path overfit_config;  // 4 target utterances, train = validation
};

// Writes <out>/{source,target,overfit}/ with wav/, alphabet.txt,
// train/val/test manifests (80/10/10 split), corpus.txt, plus one config per
// scenario in <out>.
SynthLayout generate_synthetic_corpus(const std::filesystem::path& out_dir,
                                      const SynthOptions& options);

}  // namespace asrz
