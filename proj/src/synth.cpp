// SPDX-License-Identifier: Apache-2.0
#include "asrz/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

#include "asrz/data.hpp"
#include "asrz/error.hpp"
#include "asrz/lm.hpp"
#include "asrz/utf8.hpp"

namespace asrz {

namespace {

constexpr char32_t kSourceChars[] = U" abdegiklmnorstu";
constexpr char32_t kExtraChars[] = U"äöü";
// Fixed order over the union of both alphabets; a character's tones depend
// only on its position here.
constexpr char32_t kToneOrder[] = U" abdegiklmnorstuäöü";

constexpr size_t kLeadSamples = 1600;
constexpr size_t kCharSamples = 1600;
constexpr size_t kGapSamples = 640;
constexpr size_t kFadeSamples = 80;
constexpr double kNoiseStd = 0.01;

std::u32string random_word(const std::u32string& letters, const std::u32string& extra, Rng& rng) {
  const size_t len = 2 + static_cast<size_t>(rng.below(3));
  std::u32string w;
  for (size_t i = 0; i < len; ++i) w.push_back(letters[rng.below(letters.size())]);
  if (!extra.empty() && rng.uniform() < 0.6) {
    w[rng.below(w.size())] = extra[rng.below(extra.size())];
  }
  return w;
}

std::vector<std::u32string> make_lexicon(const std::u32string& letters, const std::u32string& extra,
                                         size_t n, Rng& rng) {
  std::vector<std::u32string> lex;
  while (lex.size() < n) {
    auto w = random_word(letters, extra, rng);
    if (std::find(lex.begin(), lex.end(), w) == lex.end()) lex.push_back(std::move(w));
  }
  return lex;
}

std::u32string random_sentence(const std::vector<std::u32string>& lexicon, Rng& rng) {
  const size_t words = 1 + static_cast<size_t>(rng.below(3));
  std::u32string s;
  for (size_t i = 0; i < words; ++i) {
    if (i) s.push_back(U' ');
    s += lexicon[rng.below(lexicon.size())];
  }
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

// Writes wavs, manifests, alphabet and LM corpus for one language.
void write_language(const std::filesystem::path& dir, const Alphabet& alphabet,
                    const std::vector<std::u32string>& lexicon, size_t n_utterances,
                    size_t corpus_lines, bool split, Rng& rng) {
  std::filesystem::create_directories(dir / "wav");
  alphabet.save(dir / "alphabet.txt");
  std::vector<std::pair<std::string, std::string>> rows;
  for (size_t i = 0; i < n_utterances; ++i) {
    const std::u32string text = random_sentence(lexicon, rng);
    char name[32];
    std::snprintf(name, sizeof name, "wav/utt%04zu.wav", i);
    save_wav(dir / name, synthesize_utterance(text, rng));
    rows.emplace_back(name, utf8_encode(text));
  }
  if (split) {
    const size_t n_train = n_utterances * 8 / 10;
    const size_t n_val = n_utterances / 10;
    write_manifest(dir / "train.csv", {rows.begin(), rows.begin() + n_train});
    write_manifest(dir / "val.csv", {rows.begin() + n_train, rows.begin() + n_train + n_val});
    write_manifest(dir / "test.csv", {rows.begin() + n_train + n_val, rows.end()});
  } else {
    write_manifest(dir / "train.csv", rows);
  }
  std::string corpus;
  for (size_t i = 0; i < corpus_lines; ++i) corpus += utf8_encode(random_sentence(lexicon, rng)) + "\n";
  write_text(dir / "corpus.txt", corpus);
  write_arpa(train_ngram(read_corpus(dir / "corpus.txt"), 3, 0.75, &alphabet), dir / "lm.arpa");
}

std::string toy_config(const std::string& lang, const std::string& val, size_t epochs,
                       size_t batch_size, double dropout, uint64_t seed,
                       const std::string& out_dir) {
  std::string s;
  s += "# toy scenario written by `asrz synth-data`\n";
  s += "batch_size=" + std::to_string(batch_size) + "\n";
  s += "lr=0.001\n";
  s += "dropout=" + std::to_string(dropout) + "\n";
  s += "epochs=" + std::to_string(epochs) + "\n";
  s += "seed=" + std::to_string(seed) + "\n";
  s += "hidden=64\n";
  s += "n_mel_filters=26\n";
  s += "n_cepstra=13\n";
  s += "context_radius=4\n";
  s += "alphabet=" + lang + "/alphabet.txt\n";
  s += "train_manifest=" + lang + "/train.csv\n";
  s += "val_manifest=" + lang + "/" + val + "\n";
  s += "test_manifest=" + lang + "/" + (val == "train.csv" ? "train.csv" : "test.csv") + "\n";
  s += "lm=" + lang + "/lm.arpa\n";
  s += "out_dir=" + out_dir + "\n";
  s += "beam_width=16\n";
  s += "keep_checkpoints=3\n";
  return s;
}

}  // namespace

Alphabet synth_source_alphabet() { return Alphabet(std::u32string(kSourceChars)); }

Alphabet synth_target_alphabet() {
  return Alphabet(std::u32string(kSourceChars) + std::u32string(kExtraChars));
}

std::pair<double, double> tone_signature(char32_t ch) {
  const std::u32string_view order(kToneOrder);
  const size_t i = order.find(ch);
  if (i == std::u32string_view::npos) {
    throw Error(ErrorCode::CharOutsideAlphabet, "no tone signature for " + describe_char(ch));
  }
  return {300.0 + 200.0 * static_cast<double>(i % 5), 1500.0 + 500.0 * static_cast<double>(i / 5)};
}

AudioClip synthesize_utterance(std::u32string_view text, Rng& rng) {
  AudioClip clip;
  clip.sample_rate = kSampleRate;
  auto& s = clip.samples;
  s.assign(kLeadSamples, 0.0);
  for (char32_t ch : text) {
    const auto [low, high] = tone_signature(ch);
    const double amplitude = 0.25 + 0.1 * rng.uniform();
    const double phase_low = 2.0 * std::numbers::pi * rng.uniform();
    const double phase_high = 2.0 * std::numbers::pi * rng.uniform();
    const size_t length = kCharSamples + 160 * static_cast<size_t>(rng.below(3));
    for (size_t n = 0; n < length; ++n) {
      const double t = static_cast<double>(n) / kSampleRate;
      double env = 1.0;
      if (n < kFadeSamples) env = 0.5 - 0.5 * std::cos(std::numbers::pi * n / kFadeSamples);
      if (length - n <= kFadeSamples) {
        env = 0.5 - 0.5 * std::cos(std::numbers::pi * (length - n) / kFadeSamples);
      }
      s.push_back(amplitude * env *
                  (std::sin(2.0 * std::numbers::pi * low * t + phase_low) +
                   0.6 * std::sin(2.0 * std::numbers::pi * high * t + phase_high)) /
                  1.6);
    }
    s.insert(s.end(), kGapSamples, 0.0);
  }
  s.insert(s.end(), kLeadSamples, 0.0);
  for (double& v : s) v = std::clamp(v + kNoiseStd * rng.normal(), -1.0, 32767.0 / 32768.0);
  return clip;
}

SynthLayout generate_synthetic_corpus(const std::filesystem::path& out_dir,
                                      const SynthOptions& options) {
  std::filesystem::create_directories(out_dir);
  Rng rng(mix_seed(options.seed, 0x5E7D));
  const std::u32string letters = std::u32string(kSourceChars).substr(1);
  const auto source_lex = make_lexicon(letters, U"", 30, rng);
  const auto target_lex = make_lexicon(letters, kExtraChars, 30, rng);

  write_language(out_dir / "source", synth_source_alphabet(), source_lex,
                 options.source_utterances, options.corpus_lines, true, rng);
  write_language(out_dir / "target", synth_target_alphabet(), target_lex,
                 options.target_utterances, options.corpus_lines, true, rng);
  write_language(out_dir / "overfit", synth_target_alphabet(), target_lex, 4,
                 options.corpus_lines, false, rng);

  SynthLayout layout;
  layout.root = out_dir;
  layout.source_config = out_dir / "source.conf";
  layout.target_config = out_dir / "target.conf";
  layout.overfit_config = out_dir / "overfit.conf";
  write_text(layout.source_config,
             toy_config("source", "val.csv", 40, 8, 0.1, options.seed, "runs/source"));
  write_text(layout.target_config,
             toy_config("target", "val.csv", 30, 8, 0.1, options.seed, "runs/suite"));
  write_text(layout.overfit_config,
             toy_config("overfit", "train.csv", 300, 1, 0.0, options.seed, "runs/overfit"));
  return layout;
}

}  // namespace asrz
