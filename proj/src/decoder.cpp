// SPDX-License-Identifier: Apache-2.0
#include "asrz/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "asrz/ctc.hpp"
#include "asrz/error.hpp"

namespace asrz {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLn10 = std::numbers::ln10;

void check_shapes(const Matrix& logprobs, const Alphabet& alphabet) {
  if (logprobs.cols() != alphabet.n_labels()) {
    throw Error(ErrorCode::DimensionMismatch,
                "logprobs have " + std::to_string(logprobs.cols()) + " columns, alphabet needs " +
                    std::to_string(alphabet.n_labels()));
  }
}

void check_vocabulary(const NGramLM* lm, const Alphabet& alphabet) {
  if (lm == nullptr) return;
  for (char32_t ch : alphabet.chars()) {
    if (!lm->can_predict(ch)) {
      throw Error(ErrorCode::VocabularyMismatch,
                  "language model lacks alphabet character " + describe_char(ch));
    }
  }
}

std::u32string lm_history(const Labeling& prefix, const Alphabet& alphabet) {
  std::u32string h(1, kSentenceStart);
  for (int l : prefix) h.push_back(alphabet.at(l));
  return h;
}

struct Cell {
  double blank = kNegInf;
  double nonblank = kNegInf;
  double lm = 0.0;
};

double total(const Cell& c) { return log_add(c.blank, c.nonblank); }

}  // namespace

void DecodeParams::validate() const {
  if (beam_width < 1 || alpha < 0.0 || beta < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "decode params need beam_width >= 1, alpha, beta >= 0");
  }
}

DecodeResult greedy_decode(const Matrix& logprobs, const Alphabet& alphabet) {
  check_shapes(logprobs, alphabet);
  std::vector<int> path(logprobs.rows());
  double score = 0.0;
  for (size_t t = 0; t < logprobs.rows(); ++t) {
    auto row = logprobs.row(t);
    const auto best = std::max_element(row.begin(), row.end());
    path[t] = static_cast<int>(best - row.begin());
    score += *best;
  }
  DecodeResult r;
  r.labels = collapse(path, alphabet.blank());
  r.text = alphabet.decode(r.labels);
  r.score = score;
  return r;
}

DecodeResult beam_decode(const Matrix& logprobs, const NGramLM* lm, const DecodeParams& params,
                         const Alphabet& alphabet) {
  params.validate();
  check_shapes(logprobs, alphabet);
  check_vocabulary(lm, alphabet);
  const int blank = alphabet.blank();
  const double alpha = lm != nullptr ? params.alpha : 0.0;

  auto combined = [&](const Labeling& prefix, const Cell& c) {
    return total(c) + alpha * c.lm + params.beta * static_cast<double>(prefix.size());
  };

  std::map<Labeling, Cell> beams;
  beams[Labeling{}] = Cell{0.0, kNegInf, 0.0};
  for (size_t t = 0; t < logprobs.rows(); ++t) {
    auto lp = logprobs.row(t);
    std::map<Labeling, Cell> next;
    for (const auto& [prefix, cell] : beams) {
      const double both = total(cell);
      Cell& stay = next.try_emplace(prefix, Cell{kNegInf, kNegInf, cell.lm}).first->second;
      stay.blank = log_add(stay.blank, both + lp[blank]);
      if (!prefix.empty()) {
        stay.nonblank = log_add(stay.nonblank, cell.nonblank + lp[prefix.back()]);
      }
      std::u32string history;
      if (lm != nullptr) history = lm_history(prefix, alphabet);
      for (int c = 0; c < blank; ++c) {
        Labeling extended = prefix;
        extended.push_back(c);
        auto [it, inserted] = next.try_emplace(std::move(extended), Cell{});
        if (inserted && lm != nullptr) {
          it->second.lm = cell.lm + kLn10 * lm->score(history, alphabet.at(c));
        }
        // A repeated character needs a blank in between to count as new.
        const double from = (!prefix.empty() && prefix.back() == c) ? cell.blank : both;
        it->second.nonblank = log_add(it->second.nonblank, from + lp[c]);
      }
    }
    std::vector<std::pair<double, const Labeling*>> ranked;
    ranked.reserve(next.size());
    for (const auto& [prefix, cell] : next) ranked.emplace_back(combined(prefix, cell), &prefix);
    const size_t keep = std::min(params.beam_width, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep),
                      ranked.end(), [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return *a.second < *b.second;
                      });
    std::map<Labeling, Cell> pruned;
    for (size_t i = 0; i < keep; ++i) pruned.emplace(*ranked[i].second, next.at(*ranked[i].second));
    beams = std::move(pruned);
  }

  DecodeResult best;
  best.score = kNegInf;
  bool have = false;
  for (const auto& [prefix, cell] : beams) {
    double lm_total = cell.lm;
    if (lm != nullptr) lm_total += kLn10 * lm->score(lm_history(prefix, alphabet), kSentenceEnd);
    const double s =
        total(cell) + alpha * lm_total + params.beta * static_cast<double>(prefix.size());
    // std::map iterates in lexicographic order, so strict > keeps the smaller prefix on ties.
    if (!have || s > best.score) {
      best.labels = prefix;
      best.score = s;
      have = true;
    }
  }
  best.text = alphabet.decode(best.labels);
  return best;
}

DecodeResult oracle_decode(const Matrix& logprobs, const NGramLM* lm, const DecodeParams& params,
                           const Alphabet& alphabet) {
  params.validate();
  check_shapes(logprobs, alphabet);
  check_vocabulary(lm, alphabet);
  const size_t frames = logprobs.rows();
  const size_t n_chars = alphabet.size();
  uint64_t budget = 1;
  for (size_t t = 0; t < frames; ++t) {
    budget *= alphabet.n_labels();
    if (budget > kMaxEnumeratedPaths) {
      throw Error(ErrorCode::TooLargeToEnumerate, "oracle decode search space too large");
    }
  }
  const double alpha = lm != nullptr ? params.alpha : 0.0;

  DecodeResult best;
  best.score = kNegInf;
  bool have = false;
  // Candidates are visited in lexicographic order, so strict > keeps the
  // lexicographically smallest maximizer.
  std::vector<Labeling> candidates;
  for (size_t len = 0; len <= frames; ++len) {
    uint64_t count = 1;
    for (size_t i = 0; i < len; ++i) count *= n_chars;
    for (uint64_t code = 0; code < count; ++code) {
      Labeling s(len);
      uint64_t rest = code;
      for (size_t i = len; i-- > 0;) {
        s[i] = static_cast<int>(rest % n_chars);
        rest /= n_chars;
      }
      candidates.push_back(std::move(s));
    }
  }
  std::sort(candidates.begin(), candidates.end());
  for (const Labeling& s : candidates) {
    if (!is_feasible(s, frames)) continue;
    double score = -ctc_loss(logprobs, s);
    if (lm != nullptr) score += alpha * kLn10 * lm->sentence_log10(alphabet.decode(s));
    score += params.beta * static_cast<double>(s.size());
    if (!have || score > best.score) {
      best.labels = s;
      best.score = score;
      have = true;
    }
  }
  best.text = alphabet.decode(best.labels);
  return best;
}

}  // namespace asrz
