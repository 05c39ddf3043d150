// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asrz/checkpoint.hpp"
#include "asrz/config.hpp"
#include "asrz/data.hpp"
#include "asrz/eval.hpp"
#include "asrz/lm.hpp"
#include "asrz/optim.hpp"

namespace asrz {

struct CurvePoint {
  size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool operator==(const CurvePoint&) const = default;
};

struct LearningCurve {
  std::vector<CurvePoint> points;

  // Epoch with the smallest validation loss; the earliest one on ties.
  size_t best_epoch() const;
  std::string to_csv() const;  // "epoch,train_loss,val_loss", %.17g
  static LearningCurve parse_csv(std::string_view text);
};

// Mean CTC loss over a dataset, dropout off.
double dataset_loss(const ModelParams& params, const Dataset& data, double relu_cap);

struct BatchOutcome {
  double loss = 0.0;  // mean over the batch
  Gradients grads;    // mean over the batch
};

// Forward/backward for every utterance of the batch in parallel, each on its
// unpadded frames with its own dropout stream; gradients are summed in batch
// order so the result does not depend on the thread count.
BatchOutcome batch_gradients(const ModelParams& params, const Batch& batch,
                             const ForwardOptions& options, uint64_t stream_seed);

struct TrainResult {
  std::filesystem::path run_dir;
  LearningCurve curve;
  size_t best_epoch = 0;
  ModelParams best_params;
  CheckpointMeta meta;
  size_t trainable_params = 0;
};

// One regime. Reference starts from random weights; every other plan needs
// `init`, whose output layer is re-initialized for the target alphabet.
// Writes config.txt, curve.csv, epoch_NNN.ckpt, best.ckpt and best.txt into
// run_dir.
TrainResult train(const TrainConfig& cfg, FreezePlan plan, const std::optional<Checkpoint>& init,
                  const std::filesystem::path& run_dir, std::ostream* log = nullptr);

struct EvalOutput {
  EvalReport report;
  std::vector<std::string> refs;
  std::vector<std::string> hyps;
};

// Beam search (or greedy when `greedy` is set) over a loaded dataset.
EvalOutput evaluate_dataset(const ModelParams& params, const Alphabet& alphabet,
                            const Dataset& data, const NGramLM* lm, const DecodeParams& decode,
                            bool greedy = false, double relu_cap = kDefaultReluCap);

// Loads the manifest against the checkpoint's alphabet and decodes it.
// Throws AlphabetMismatch if a transcript needs characters the model lacks.
// `normalize` applies to scoring only.
EvalOutput evaluate(const Checkpoint& ckpt, const std::filesystem::path& manifest,
                    const NGramLM* lm, const DecodeParams& decode,
                    const NormalizeOptions& normalize = {});

// "method,wer,cer" data row with four decimals.
std::string report_row(std::string_view method, const EvalReport& report);

struct SuiteRow {
  FreezePlan plan = FreezePlan::Reference;
  double wer = 0.0;
  double cer = 0.0;
  size_t best_epoch = 0;
  size_t trainable_params = 0;
};

struct SuiteReport {
  std::vector<SuiteRow> rows;  // Reference, F0 .. F4
  std::string results_csv() const;
};

// Runs all six regimes on the target data of `cfg` with identical seeds,
// evaluates each at its best epoch on the test manifest, and writes
// results.csv, trainable_params.csv and curves/<regime>.csv under cfg.out_dir.
SuiteReport run_suite(const TrainConfig& cfg, const std::filesystem::path& source_checkpoint,
                      std::ostream* log = nullptr);

}  // namespace asrz
