// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "asrz/alphabet.hpp"

namespace asrz {

// Sentence boundary tokens live outside the Unicode range so they can share a
// std::u32string with ordinary characters.
inline constexpr char32_t kSentenceStart = 0x110000;
inline constexpr char32_t kSentenceEnd = 0x110001;

struct NGramEntry {
  double log10_prob = 0.0;
  double log10_backoff = 0.0;
  bool has_backoff = false;
};

// Character n-gram model in backoff form:
//   p(c | h) = P(hc)                 if hc is stored
//            = bow(h) · p(c | h')    otherwise (h' drops the oldest token)
// A missing bow counts as 1.
class NGramLM {
 public:
  using Table = std::unordered_map<std::u32string, NGramEntry>;

  NGramLM(int order, std::vector<Table> tables);

  int order() const noexcept { return order_; }
  // Tokens that can be predicted: characters and kSentenceEnd.
  const std::u32string& vocabulary() const noexcept { return vocab_; }
  bool can_predict(char32_t token) const;

  // log10 p(token | context); only the last order-1 context tokens matter.
  // Throws UnknownChar when `token` is not predictable.
  double score(std::u32string_view context, char32_t token) const;
  // log10 of the whole line including the end-of-sentence event.
  double sentence_log10(std::u32string_view text) const;

  // Stored n-grams of length k (1-based).
  const Table& table(int k) const { return tables_.at(static_cast<size_t>(k - 1)); }
  // Every stored gram carrying a backoff weight, i.e. every seen context.
  std::vector<std::u32string> contexts() const;

 private:
  int order_;
  std::vector<Table> tables_;
  std::u32string vocab_;
};

// Interpolated Kneser-Ney with one absolute discount. The highest order and
// grams beginning with <s> use raw counts; other lower orders use
// continuation counts (number of distinct left neighbours). The unigram level
// interpolates with the uniform distribution over the vocabulary, which is
// the alphabet (when given) or the observed characters, plus </s>.
// Each line is wrapped in <s> ... </s>.
NGramLM train_ngram(const std::vector<std::string>& corpus, int order,
                    double discount = 0.75, const Alphabet* alphabet = nullptr);

// ARPA text. Tokens are UTF-8 characters except "<s>", "</s>" and "<space>"
// for U+0020; entry lines are "log10prob<TAB>gram<TAB>log10backoff" with the
// gram's tokens separated by single spaces and the backoff column present
// only on context grams.
std::string to_arpa(const NGramLM& lm);
NGramLM parse_arpa(std::string_view text);
void write_arpa(const NGramLM& lm, const std::filesystem::path& path);
NGramLM read_arpa(const std::filesystem::path& path);

std::vector<std::string> read_corpus(const std::filesystem::path& path);

}  // namespace asrz
