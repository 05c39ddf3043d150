// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace asrz {

// Levenshtein distance with unit costs, full DP table.
template <typename T>
size_t edit_distance(std::span<const T> a, std::span<const T> b) {
  const size_t n = a.size();
  const size_t m = b.size();
  std::vector<size_t> table((n + 1) * (m + 1));
  auto at = [m, &table](size_t i, size_t j) -> size_t& { return table[i * (m + 1) + j]; };
  for (size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      const size_t sub = at(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1);
      at(i, j) = std::min({sub, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  return at(n, m);
}

size_t edit_distance(const std::u32string& a, const std::u32string& b);
size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct NormalizeOptions {
  bool lowercase = false;
  bool strip_punctuation = false;
};

// Trims, collapses whitespace runs to one space and applies the options.
// Lowercasing covers ASCII and Latin-1 letters.
std::u32string normalize_text(std::u32string_view text, const NormalizeOptions& options = {});
std::vector<std::u32string> split_words(std::u32string_view normalized);

struct UtteranceScore {
  size_t word_distance = 0;
  size_t ref_words = 0;
  size_t char_distance = 0;
  size_t ref_chars = 0;
};

struct EvalReport {
  double wer = 0.0;
  double cer = 0.0;
  size_t n_utterances = 0;
  std::vector<UtteranceScore> utterances;
};

// Corpus-pooled scores: Σ distances / Σ reference lengths. Texts are UTF-8.
// Throws LengthMismatch for unequal list sizes and EmptyReference when a
// reference is empty after normalization.
EvalReport score_corpus(const std::vector<std::string>& refs, const std::vector<std::string>& hyps,
                        const NormalizeOptions& options = {});
double wer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps,
           const NormalizeOptions& options = {});
double cer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps,
           const NormalizeOptions& options = {});

}  // namespace asrz
