// SPDX-License-Identifier: Apache-2.0
// Command-line front end: training, fine-tuning, evaluation, decoding,
// LM training, the six-regime suite and the synthetic data generator.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "asrz/checkpoint.hpp"
#include "asrz/data.hpp"
#include "asrz/decoder.hpp"
#include "asrz/error.hpp"
#include "asrz/harness.hpp"
#include "asrz/lm.hpp"
#include "asrz/synth.hpp"
#include "asrz/utf8.hpp"

namespace {

struct DecodeFlags {
  std::string lm;
  asrz::DecodeParams params;

  void attach(CLI::App* cmd) {
    cmd->add_option("--lm", lm, "ARPA character language model");
    cmd->add_option("--alpha", params.alpha, "LM weight");
    cmd->add_option("--beta", params.beta, "per-character bonus");
    cmd->add_option("--beam-width", params.beam_width, "beam width");
  }

  std::optional<asrz::NGramLM> load_lm() const {
    if (lm.empty()) return std::nullopt;
    return asrz::read_arpa(lm);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asrz: small CTC speech recognizer with layer-freezing transfer"};
  app.require_subcommand(1);

  std::string config_path;
  std::string init_path;
  int freeze = 0;

  auto* train_cmd = app.add_subcommand("train", "train from random weights (Reference regime)");
  train_cmd->add_option("--config", config_path, "key=value config")->required();

  auto* finetune_cmd = app.add_subcommand("finetune", "fine-tune a source checkpoint");
  finetune_cmd->add_option("--config", config_path, "key=value config")->required();
  finetune_cmd->add_option("--init", init_path, "source checkpoint")->required();
  finetune_cmd->add_option("--freeze", freeze, "number of frozen layers")
      ->required()
      ->check(CLI::Range(0, 4));

  std::string checkpoint_path;
  std::string manifest_path;
  std::string report_path;
  std::string method = "model";
  DecodeFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("eval", "beam-decode a manifest and report WER/CER");
  eval_cmd->add_option("--checkpoint", checkpoint_path)->required();
  eval_cmd->add_option("--manifest", manifest_path)->required();
  eval_cmd->add_option("--method", method, "name for the report row");
  eval_cmd->add_option("--report", report_path, "write method,wer,cer CSV here");
  asrz::NormalizeOptions normalize;
  eval_cmd->add_flag("--lowercase", normalize.lowercase, "lowercase before scoring");
  eval_cmd->add_flag("--strip-punctuation", normalize.strip_punctuation,
                     "drop punctuation before scoring");
  eval_flags.attach(eval_cmd);

  std::string wav_path;
  DecodeFlags decode_flags;
  auto* decode_cmd = app.add_subcommand("decode", "transcribe one WAV file");
  decode_cmd->add_option("--checkpoint", checkpoint_path)->required();
  decode_cmd->add_option("--wav", wav_path)->required();
  decode_flags.attach(decode_cmd);

  std::string corpus_path;
  std::string out_path;
  std::string alphabet_path;
  int order = 3;
  double discount = 0.75;
  auto* lm_cmd = app.add_subcommand("lm-train", "train a Kneser-Ney character LM");
  lm_cmd->add_option("--corpus", corpus_path, "one sentence per line")->required();
  lm_cmd->add_option("--order", order)->check(CLI::Range(1, 6));
  lm_cmd->add_option("--out", out_path, "ARPA output")->required();
  lm_cmd->add_option("--alphabet", alphabet_path, "restrict vocabulary to this alphabet");
  lm_cmd->add_option("--discount", discount);

  std::string source_path;
  auto* suite_cmd = app.add_subcommand("suite", "run all six transfer regimes");
  suite_cmd->add_option("--config", config_path, "target-language config")->required();
  suite_cmd->add_option("--source-checkpoint", source_path)->required();

  std::string synth_dir;
  asrz::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth-data", "write the toy source/target scenario");
  synth_cmd->add_option("--out-dir", synth_dir)->required();
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--source-utterances", synth.source_utterances);
  synth_cmd->add_option("--target-utterances", synth.target_utterances);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const auto cfg = asrz::load_train_config(config_path);
      const auto run = asrz::train(cfg, asrz::FreezePlan::Reference, std::nullopt, cfg.out_dir,
                                   &std::cerr);
      std::cout << "best epoch " << run.best_epoch << " -> " << (run.run_dir / "best.ckpt").string()
                << "\n";
    } else if (*finetune_cmd) {
      const auto cfg = asrz::load_train_config(config_path);
      const auto init = asrz::load_checkpoint(init_path);
      const auto run = asrz::train(cfg, asrz::plan_from_frozen_count(freeze), init, cfg.out_dir,
                                   &std::cerr);
      std::cout << "best epoch " << run.best_epoch << " -> " << (run.run_dir / "best.ckpt").string()
                << "\n";
    } else if (*eval_cmd) {
      const auto ckpt = asrz::load_checkpoint(checkpoint_path);
      const auto lm = eval_flags.load_lm();
      const auto out = asrz::evaluate(ckpt, manifest_path, lm ? &*lm : nullptr, eval_flags.params,
                                      normalize);
      const std::string table = "method,wer,cer\n" + asrz::report_row(method, out.report) + "\n";
      std::cout << table;
      if (!report_path.empty()) {
        std::ofstream(report_path, std::ios::binary | std::ios::trunc) << table;
      }
    } else if (*decode_cmd) {
      const auto ckpt = asrz::load_checkpoint(checkpoint_path);
      const auto lm = decode_flags.load_lm();
      const auto feats = asrz::featurize(asrz::load_wav(wav_path), ckpt.meta.features);
      asrz::Rng unused(0);
      const auto fwd = asrz::forward(ckpt.params, feats, asrz::ForwardOptions{}, unused);
      const auto result = asrz::beam_decode(fwd.logprobs, lm ? &*lm : nullptr, decode_flags.params,
                                            ckpt.meta.alphabet);
      std::cout << asrz::utf8_encode(result.text) << "\n";
    } else if (*lm_cmd) {
      std::optional<asrz::Alphabet> alphabet;
      if (!alphabet_path.empty()) alphabet = asrz::Alphabet::load(alphabet_path);
      const auto lm = asrz::train_ngram(asrz::read_corpus(corpus_path), order, discount,
                                        alphabet ? &*alphabet : nullptr);
      asrz::write_arpa(lm, out_path);
    } else if (*suite_cmd) {
      const auto cfg = asrz::load_train_config(config_path);
      const auto report = asrz::run_suite(cfg, source_path, &std::cerr);
      std::cout << report.results_csv();
    } else if (*synth_cmd) {
      const auto layout = asrz::generate_synthetic_corpus(synth_dir, synth);
      std::cout << layout.source_config.string() << "\n"
                << layout.target_config.string() << "\n"
                << layout.overfit_config.string() << "\n";
    }
  } catch (const asrz::Error& e) {
    std::cerr << "asrz: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "asrz: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
