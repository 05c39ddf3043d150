// SPDX-License-Identifier: Apache-2.0
#include "asrz/eval.hpp"

#include "asrz/error.hpp"
#include "asrz/utf8.hpp"

namespace asrz {

namespace {

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' ||
         c == 0xA0;
}

bool is_punctuation(char32_t c) {
  return (c >= U'!' && c <= U'/') || (c >= U':' && c <= U'@') || (c >= U'[' && c <= U'`') ||
         (c >= U'{' && c <= U'~') || c == 0xAB || c == 0xBB || c == 0x201E || c == 0x201C ||
         c == 0x201D || c == 0x2019;
}

char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  return c;
}

}  // namespace

size_t edit_distance(const std::u32string& a, const std::u32string& b) {
  return edit_distance<char32_t>(std::span<const char32_t>(a), std::span<const char32_t>(b));
}

size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return edit_distance<std::string>(std::span<const std::string>(a),
                                    std::span<const std::string>(b));
}

std::u32string normalize_text(std::u32string_view text, const NormalizeOptions& options) {
  std::u32string out;
  bool pending_space = false;
  for (char32_t c : text) {
    if (options.strip_punctuation && is_punctuation(c)) continue;
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(options.lowercase ? to_lower(c) : c);
  }
  return out;
}

std::vector<std::u32string> split_words(std::u32string_view normalized) {
  std::vector<std::u32string> words;
  std::u32string current;
  for (char32_t c : normalized) {
    if (c == U' ') {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

EvalReport score_corpus(const std::vector<std::string>& refs, const std::vector<std::string>& hyps,
                        const NormalizeOptions& options) {
  if (refs.size() != hyps.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(refs.size()) + " references vs " +
                                               std::to_string(hyps.size()) + " hypotheses");
  }
  EvalReport report;
  report.n_utterances = refs.size();
  size_t word_dist = 0, words = 0, char_dist = 0, chars = 0;
  for (size_t i = 0; i < refs.size(); ++i) {
    const std::u32string ref = normalize_text(utf8_decode(refs[i]), options);
    const std::u32string hyp = normalize_text(utf8_decode(hyps[i]), options);
    if (ref.empty()) {
      throw Error(ErrorCode::EmptyReference, "reference " + std::to_string(i) + " is empty");
    }
    const auto ref_words = split_words(ref);
    const auto hyp_words = split_words(hyp);
    UtteranceScore u;
    u.word_distance = edit_distance<std::u32string>(std::span<const std::u32string>(ref_words),
                                                    std::span<const std::u32string>(hyp_words));
    u.ref_words = ref_words.size();
    u.char_distance = edit_distance(ref, hyp);
    u.ref_chars = ref.size();
    word_dist += u.word_distance;
    words += u.ref_words;
    char_dist += u.char_distance;
    chars += u.ref_chars;
    report.utterances.push_back(u);
  }
  if (words > 0) {
    report.wer = static_cast<double>(word_dist) / static_cast<double>(words);
    report.cer = static_cast<double>(char_dist) / static_cast<double>(chars);
  }
  return report;
}

double wer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps,
           const NormalizeOptions& options) {
  return score_corpus(refs, hyps, options).wer;
}

double cer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps,
           const NormalizeOptions& options) {
  return score_corpus(refs, hyps, options).cer;
}

}  // namespace asrz
