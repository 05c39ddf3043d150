// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "asrz/ctc.hpp"
#include "asrz/decoder.hpp"
#include "asrz/error.hpp"
#include "asrz/lm.hpp"
#include "asrz/utf8.hpp"
#include "doctest.h"
#include "oracles.hpp"

using asrz::Alphabet;
using asrz::DecodeParams;
using asrz::Matrix;

namespace {

Matrix log_of(const Matrix& p) {
  Matrix out = p;
  for (double& v : out.values()) v = std::log(v);
  return out;
}

DecodeParams params(size_t beam, double alpha, double beta) {
  DecodeParams p;
  p.beam_width = beam;
  p.alpha = alpha;
  p.beta = beta;
  return p;
}

asrz::NGramLM random_lm(const Alphabet& alphabet, asrz::Rng& rng) {
  std::vector<std::string> corpus;
  const size_t lines = 1 + rng.below(6);
  for (size_t i = 0; i < lines; ++i) {
    std::u32string line;
    const size_t len = 1 + rng.below(5);
    for (size_t j = 0; j < len; ++j) line.push_back(alphabet.chars()[rng.below(alphabet.size())]);
    corpus.push_back(asrz::utf8_encode(line));
  }
  return asrz::train_ngram(corpus, 1 + static_cast<int>(rng.below(3)), 0.75, &alphabet);
}

}  // namespace

TEST_SUITE("decoder") {

TEST_CASE("greedy examples") {
  const Alphabet ab = Alphabet::from_utf8("ab");
  const Matrix path = log_of(Matrix{{0.8, 0.1, 0.1}, {0.7, 0.2, 0.1}, {0.1, 0.1, 0.8}});
  CHECK(asrz::greedy_decode(path, ab).text == U"a");
  const Matrix blanks = log_of(Matrix{{0.1, 0.1, 0.8}, {0.1, 0.1, 0.8}});
  CHECK(asrz::greedy_decode(blanks, ab).text == U"");
  const Matrix tie = log_of(Matrix{{0.4, 0.4, 0.2}});
  CHECK(asrz::greedy_decode(tie, ab).text == U"a");
}

TEST_CASE("beam search returns nothing when blank dominates") {
  const Alphabet ab = Alphabet::from_utf8("ab");
  Matrix p(5, 3, 0.005);
  for (size_t t = 0; t < 5; ++t) p(t, 2) = 0.99;
  CHECK(asrz::beam_decode(log_of(p), nullptr, {}, ab).text == U"");
}

TEST_CASE("oracle examples") {
  const Alphabet a = Alphabet::from_utf8("a");
  CHECK(asrz::oracle_decode(log_of(Matrix{{0.1, 0.9}}), nullptr, params(1, 0, 0), a).text == U"");
  const Matrix half = log_of(Matrix{{0.5, 0.5}, {0.5, 0.5}});
  const auto r = asrz::oracle_decode(half, nullptr, params(1, 0, 0), a);
  CHECK(r.text == U"a");
  CHECK(r.score == doctest::Approx(std::log(0.75)));
  const Matrix big = log_of(Matrix(14, 3, 1.0 / 3.0));
  CHECK_THROWS_AS(asrz::oracle_decode(big, nullptr, {}, Alphabet::from_utf8("ab")), asrz::Error);
}

TEST_CASE("without an LM a wide beam finds the CTC argmax") {
  const Alphabet ab = Alphabet::from_utf8("ab");
  asrz::Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix lp = oracle::random_logprobs(4, 3, rng);
    const auto beam = asrz::beam_decode(lp, nullptr, params(64, 0, 0), ab);
    const auto exact = asrz::oracle_decode(lp, nullptr, params(64, 0, 0), ab);
    CHECK(beam.labels == exact.labels);
    CHECK(beam.score == doctest::Approx(exact.score).epsilon(1e-12));
  }
}

TEST_CASE("the LM breaks an acoustic tie") {
  const Alphabet ab = Alphabet::from_utf8("ab");
  // a and b are interchangeable acoustically, so "a" and "b" tie on CTC alone.
  const Matrix lp = log_of(Matrix{{0.45, 0.45, 0.1}, {0.45, 0.45, 0.1}});
  const auto lm = asrz::train_ngram({"b", "b", "b", "ab"}, 2, 0.75, &ab);
  const auto no_lm = asrz::beam_decode(lp, nullptr, params(16, 0, 0), ab);
  CHECK(no_lm.text == U"a");  // lexicographic tie-break
  const auto fused = asrz::beam_decode(lp, &lm, params(16, 1.0, 0), ab);
  CHECK(fused.text == U"b");
  CHECK(asrz::oracle_decode(lp, &lm, params(16, 1.0, 0), ab).text == U"b");
}

TEST_CASE("saturated beam equals the oracle with a random LM") {
  asrz::Rng rng(72);
  for (int trial = 0; trial < 60; ++trial) {
    const Alphabet alphabet = Alphabet(std::u32string(U"abc").substr(0, 1 + rng.below(3)));
    const size_t T = 1 + rng.below(4);
    const Matrix lp = oracle::random_logprobs(T, alphabet.n_labels(), rng, 3.0);
    const auto lm = random_lm(alphabet, rng);
    const auto p = params(4096, rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0));
    CHECK(asrz::beam_decode(lp, &lm, p, alphabet).labels ==
          asrz::oracle_decode(lp, &lm, p, alphabet).labels);
  }
}

TEST_CASE("beam output probability is at least the greedy path probability") {
  const Alphabet abc = Alphabet::from_utf8("abc");
  asrz::Rng rng(73);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix lp = oracle::random_logprobs(3 + rng.below(6), 4, rng);
    const auto beam = asrz::beam_decode(lp, nullptr, params(8, 0, 0), abc);
    const auto greedy = asrz::greedy_decode(lp, abc);
    CHECK(-asrz::ctc_loss(lp, beam.labels) >= greedy.score - 1e-12);
  }
}

TEST_CASE("no beam width beats the saturated beam") {
  // Pruning can only lose probability mass, so a narrower beam never reports
  // a higher combined score than exhaustive search. Between two narrow
  // widths there is no such ordering.
  asrz::Rng rng(74);
  int reversals = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Alphabet alphabet = Alphabet::from_utf8("abc");
    const Matrix lp = oracle::random_logprobs(2 + rng.below(6), 4, rng, 2.0);
    const auto lm = random_lm(alphabet, rng);
    const double best = asrz::beam_decode(lp, &lm, params(4096, 0.5, 0.5), alphabet).score;
    double prev = -INFINITY;
    for (size_t beam : {1, 2, 4, 8, 16, 64}) {
      const double s = asrz::beam_decode(lp, &lm, params(beam, 0.5, 0.5), alphabet).score;
      CHECK(s <= best + 1e-12);
      if (s < prev) ++reversals;
      prev = s;
    }
  }
  MESSAGE("narrow-beam score reversals: " << reversals);
}

TEST_CASE("decoding is deterministic") {
  const Alphabet alphabet = Alphabet::from_utf8("abc");
  asrz::Rng rng(75);
  const Matrix lp = oracle::random_logprobs(12, 4, rng);
  const auto lm = random_lm(alphabet, rng);
  const auto a = asrz::beam_decode(lp, &lm, {}, alphabet);
  const auto b = asrz::beam_decode(lp, &lm, {}, alphabet);
  CHECK(a.labels == b.labels);
  CHECK(a.score == b.score);
}

TEST_CASE("an LM missing alphabet characters is rejected") {
  const Alphabet abc = Alphabet::from_utf8("abc");
  const auto lm = asrz::train_ngram({"ab"}, 2);
  try {
    asrz::beam_decode(Matrix(2, 4, std::log(0.25)), &lm, {}, abc);
    FAIL("expected VocabularyMismatch");
  } catch (const asrz::Error& e) {
    CHECK(e.code() == asrz::ErrorCode::VocabularyMismatch);
  }
  CHECK_THROWS_AS(asrz::beam_decode(Matrix(2, 3, 0.0), nullptr, {}, abc), asrz::Error);
  CHECK_THROWS_AS(asrz::beam_decode(Matrix(2, 4, 0.0), nullptr, params(0, 0, 0), abc), asrz::Error);
}

}  // TEST_SUITE
