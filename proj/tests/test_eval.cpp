// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <string>
#include <vector>

#include "asrz/error.hpp"
#include "asrz/eval.hpp"
#include "asrz/utf8.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace {

size_t brute(const std::u32string& a, const std::u32string& b) {
  return oracle::edit_distance<char32_t>(a, b);
}

std::u32string random_string(asrz::Rng& rng, size_t max_len, std::u32string_view chars) {
  std::u32string s(rng.below(max_len + 1), U'a');
  for (auto& c : s) c = chars[rng.below(chars.size())];
  return s;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("edit distance examples") {
  CHECK(asrz::edit_distance(U"abc", U"abc") == 0);
  CHECK(asrz::edit_distance(U"", U"abc") == 3);
  CHECK(asrz::edit_distance(U"kitten", U"sitting") == 3);
  CHECK(asrz::edit_distance(std::vector<std::string>{"a", "b"}, {"a", "c", "b"}) == 1);
}

TEST_CASE("edit distance agrees with plain recursion and is a metric") {
  asrz::Rng rng(81);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_string(rng, 7, U"abc");
    const auto b = random_string(rng, 7, U"abc");
    const auto c = random_string(rng, 7, U"abc");
    const size_t ab = asrz::edit_distance(a, b);
    CHECK(ab == brute(a, b));
    CHECK(ab == asrz::edit_distance(b, a));
    CHECK((ab == 0) == (a == b));
    CHECK(asrz::edit_distance(a, c) <= ab + asrz::edit_distance(b, c));
  }
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_string(rng, 12, U"abcd");
    const auto b = random_string(rng, 12, U"abcd");
    CHECK(asrz::edit_distance(a, b) == asrz::edit_distance(b, a));
    CHECK(asrz::edit_distance(a, b) <= std::max(a.size(), b.size()));
  }
}

TEST_CASE("wer and cer examples") {
  CHECK(asrz::wer({"ab c"}, {"ab d"}) == 0.5);
  CHECK(asrz::cer({"ab c"}, {"ab d"}) == 0.25);
  CHECK(asrz::wer({"one two", "three"}, {"one two", "three"}) == 0.0);
  CHECK(asrz::cer({"one two", "three"}, {"one two", "three"}) == 0.0);
  CHECK(asrz::wer({"one two", "three"}, {"", ""}) == 1.0);
  CHECK(asrz::cer({"one two", "three"}, {"", ""}) == 1.0);
}

TEST_CASE("scores are pooled over the corpus, not averaged per utterance") {
  // 1 error in 1 word + 0 errors in 3 words = 1/4, not (1 + 0)/2.
  CHECK(asrz::wer({"a", "b c d"}, {"x", "b c d"}) == 0.25);
}

TEST_CASE("normalization collapses whitespace and optionally folds case") {
  CHECK(asrz::normalize_text(U"  Hallo   Welt ") == U"Hallo Welt");
  asrz::NormalizeOptions fold;
  fold.lowercase = true;
  fold.strip_punctuation = true;
  CHECK(asrz::normalize_text(U"Grüße, ÄRGER!", fold) == U"grüße ärger");
  CHECK(asrz::wer({"Hallo Welt"}, {"hallo welt"}, fold) == 0.0);
  CHECK(asrz::split_words(U"a bc d") == std::vector<std::u32string>{U"a", U"bc", U"d"});
}

TEST_CASE("pooled scores match the recursive oracle on random corpora") {
  asrz::Rng rng(82);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 1 + rng.below(4);
    std::vector<std::string> refs;
    std::vector<std::string> hyps;
    size_t wd = 0, wn = 0, cd = 0, cn = 0;
    for (size_t i = 0; i < n; ++i) {
      std::u32string ref;
      do {
        ref = asrz::normalize_text(random_string(rng, 7, U"ab "));
      } while (ref.empty());
      const auto hyp = asrz::normalize_text(random_string(rng, 7, U"ab "));
      refs.push_back(asrz::utf8_encode(ref));
      hyps.push_back(asrz::utf8_encode(hyp));
      const auto rw = asrz::split_words(ref);
      const auto hw = asrz::split_words(hyp);
      wd += oracle::edit_distance<std::u32string>(rw, hw);
      wn += rw.size();
      cd += brute(ref, hyp);
      cn += ref.size();
    }
    const auto report = asrz::score_corpus(refs, hyps);
    CHECK(report.wer == static_cast<double>(wd) / static_cast<double>(wn));
    CHECK(report.cer == static_cast<double>(cd) / static_cast<double>(cn));
  }
}

TEST_CASE("corpus scores ignore utterance order") {
  asrz::Rng rng(83);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < 8; ++i) {
    pairs.emplace_back(asrz::utf8_encode(U"x" + random_string(rng, 6, U"ab ")),
                       asrz::utf8_encode(random_string(rng, 6, U"ab ")));
  }
  auto split = [](const auto& ps) {
    std::vector<std::string> r, h;
    for (const auto& [a, b] : ps) {
      r.push_back(a);
      h.push_back(b);
    }
    return std::pair{r, h};
  };
  const auto [r1, h1] = split(pairs);
  std::reverse(pairs.begin(), pairs.end());
  const auto [r2, h2] = split(pairs);
  CHECK(asrz::wer(r1, h1) == asrz::wer(r2, h2));
  CHECK(asrz::cer(r1, h1) == asrz::cer(r2, h2));
}

TEST_CASE("input errors") {
  try {
    asrz::wer({"a"}, {});
    FAIL("expected LengthMismatch");
  } catch (const asrz::Error& e) {
    CHECK(e.code() == asrz::ErrorCode::LengthMismatch);
  }
  try {
    asrz::wer({"  "}, {"a"});
    FAIL("expected EmptyReference");
  } catch (const asrz::Error& e) {
    CHECK(e.code() == asrz::ErrorCode::EmptyReference);
  }
}

}  // TEST_SUITE
