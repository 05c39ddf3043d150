// SPDX-License-Identifier: Apache-2.0
#include "asrz/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>

#include "asrz/ctc.hpp"
#include "asrz/decoder.hpp"
#include "asrz/error.hpp"
#include "asrz/parallel.hpp"
#include "asrz/utf8.hpp"

namespace asrz {

namespace {

constexpr uint64_t kInitStream = 0x1417;
constexpr uint64_t kRemapStream = 0x4E4D;
constexpr uint64_t kDropoutStream = 0xD80F;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

void accumulate(ModelParams& acc, const ModelParams& g) {
  for (int k = 1; k <= kNumLayers; ++k) {
    auto add = [](Matrix& a, const Matrix& b) {
      auto av = a.values();
      auto bv = b.values();
      for (size_t i = 0; i < av.size(); ++i) av[i] += bv[i];
    };
    add(acc.layer(k).weight, g.layer(k).weight);
    add(acc.layer(k).bias, g.layer(k).bias);
  }
}

void scale(ModelParams& p, double s) {
  for (auto& layer : p.layers) {
    for (double& v : layer.weight.values()) v *= s;
    for (double& v : layer.bias.values()) v *= s;
  }
}

bool all_finite(const ModelParams& p) {
  return std::ranges::all_of(p.layers, [](const LayerParams& l) {
    return l.weight.all_finite() && l.bias.all_finite();
  });
}

std::filesystem::path epoch_file(const std::filesystem::path& dir, size_t epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "epoch_%03zu.ckpt", epoch);
  return dir / name;
}

// Epochs ordered by validation loss, earliest first on ties.
std::vector<size_t> ranked_epochs(const LearningCurve& curve) {
  std::vector<size_t> order(curve.points.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](size_t a, size_t b) {
    return curve.points[a].val_loss < curve.points[b].val_loss;
  });
  for (auto& i : order) i = curve.points[i].epoch;
  return order;
}

Dataset load_split(const std::filesystem::path& manifest, const Alphabet& alphabet,
                   const FeatureConfig& features) {
  return load_dataset(parse_manifest(manifest, alphabet), features);
}

}  // namespace

size_t LearningCurve::best_epoch() const {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "learning curve has no epochs");
  return ranked_epochs(*this).front();
}

std::string LearningCurve::to_csv() const {
  std::string out = "epoch,train_loss,val_loss\n";
  for (const auto& p : points) {
    out += std::to_string(p.epoch) + "," + format_double(p.train_loss) + "," +
           format_double(p.val_loss) + "\n";
  }
  return out;
}

LearningCurve LearningCurve::parse_csv(std::string_view text) {
  const auto records = asrz::parse_csv(text);
  if (records.empty() || records[0] != std::vector<std::string>{"epoch", "train_loss", "val_loss"}) {
    throw Error(ErrorCode::MalformedCsv, "curve header must be epoch,train_loss,val_loss");
  }
  LearningCurve curve;
  for (size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != 3) {
      throw Error(ErrorCode::MalformedCsv, "curve row " + std::to_string(r + 1));
    }
    curve.points.push_back({std::stoul(records[r][0]), std::strtod(records[r][1].c_str(), nullptr),
                            std::strtod(records[r][2].c_str(), nullptr)});
  }
  return curve;
}

double dataset_loss(const ModelParams& params, const Dataset& data, double relu_cap) {
  const auto& utts = data.utterances;
  if (utts.empty()) throw Error(ErrorCode::EmptyInput, "dataset is empty");
  std::vector<double> losses(utts.size());
  ForwardOptions options;
  options.mode = Mode::Infer;
  options.relu_cap = relu_cap;
  parallel_for(utts.size(), [&](size_t i) {
    Rng unused(0);
    const auto fwd = forward(params, utts[i].features, options, unused);
    losses[i] = ctc_loss(fwd.logprobs, utts[i].labels);
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(utts.size());
}

BatchOutcome batch_gradients(const ModelParams& params, const Batch& batch,
                             const ForwardOptions& options, uint64_t stream_seed) {
  const size_t n = batch.size();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "empty batch");
  std::vector<double> losses(n);
  std::vector<Gradients> grads(n);
  parallel_for(n, [&](size_t i) {
    Rng rng(mix_seed(stream_seed, i));
    const Matrix feats = batch.features[i].top_rows(batch.lengths[i]);
    const auto fwd = forward(params, feats, options, rng);
    auto ctc = ctc_forward_backward(fwd.logprobs, batch.targets[i]);
    losses[i] = ctc.loss;
    grads[i] = backward(fwd.cache, params, ctc.dlogprobs);
  });
  BatchOutcome out;
  out.grads = ModelParams::zeros(params.dims);
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(losses[i]) || !all_finite(grads[i])) {
      throw Error(ErrorCode::NonFiniteLoss,
                  "utterance " + std::to_string(batch.ids[i]) + " produced loss " +
                      format_double(losses[i]) + " or a non-finite gradient");
    }
    out.loss += losses[i];
    accumulate(out.grads, grads[i]);
  }
  out.loss /= static_cast<double>(n);
  scale(out.grads, 1.0 / static_cast<double>(n));
  return out;
}

TrainResult train(const TrainConfig& cfg, FreezePlan plan, const std::optional<Checkpoint>& init,
                  const std::filesystem::path& run_dir, std::ostream* log) {
  cfg.validate();
  const Alphabet alphabet = Alphabet::load(cfg.alphabet);
  const Dataset train_data = load_split(cfg.train_manifest, alphabet, cfg.features);
  const Dataset val_data = load_split(cfg.val_manifest, alphabet, cfg.features);
  const ModelDims dims{cfg.features.stacked_width(), cfg.hidden, alphabet.n_labels()};

  ModelParams params;
  if (!uses_source_weights(plan)) {
    if (init) {
      throw Error(ErrorCode::InvalidArgument, "the Reference regime trains from random weights");
    }
    Rng rng(mix_seed(cfg.seed, kInitStream));
    params = init_params(dims, rng);
  } else {
    if (!init) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string(method_name(plan)) + " needs an initial checkpoint");
    }
    if (!(init->meta.features == cfg.features) || init->params.dims.hidden != dims.hidden ||
        init->params.dims.input_width != dims.input_width) {
      throw Error(ErrorCode::ShapeMismatch,
                  "initial checkpoint features or hidden size differ from the config");
    }
    Rng rng(mix_seed(cfg.seed, kRemapStream));
    params = remap_output_layer(init->params, alphabet, rng);
  }

  const FreezeMask mask = build_freeze_mask(plan);
  AdamHyper hyper;
  hyper.lr = cfg.lr;
  AdamState adam = AdamState::zeros(dims);
  ForwardOptions options;
  options.mode = Mode::Train;
  options.dropout.rate = cfg.dropout;
  options.relu_cap = cfg.relu_cap;

  std::filesystem::create_directories(run_dir);
  write_file(run_dir / "config.txt",
             to_config_text(cfg) + "# regime: " + std::string(plan_slug(plan)) + "\n");

  TrainResult result;
  result.run_dir = run_dir;
  result.trainable_params = trainable_parameter_count(dims, mask);
  result.meta.alphabet = alphabet;
  result.meta.features = cfg.features;

  for (size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto batches = make_batches(train_data, cfg.batch_size, cfg.seed, epoch);
    double loss_sum = 0.0;
    for (size_t b = 0; b < batches.size(); ++b) {
      const uint64_t stream = mix_seed(mix_seed(mix_seed(cfg.seed, kDropoutStream), epoch), b);
      BatchOutcome out;
      try {
        out = batch_gradients(params, batches[b], options, stream);
      } catch (const Error& e) {
        // An overflowing forward pass is reported as a diverged loss too.
        if (e.code() != ErrorCode::NonFiniteLoss && e.code() != ErrorCode::NonFiniteValue) throw;
        throw Error(ErrorCode::NonFiniteLoss, "epoch " + std::to_string(epoch) + " batch " +
                                                  std::to_string(b) + ": " + e.what());
      }
      adam_step(params, out.grads, adam, hyper, mask);
      loss_sum += out.loss * static_cast<double>(batches[b].size());
    }
    const double train_loss = loss_sum / static_cast<double>(train_data.utterances.size());
    const double val_loss = dataset_loss(params, val_data, cfg.relu_cap);
    if (!std::isfinite(val_loss)) {
      throw Error(ErrorCode::NonFiniteLoss,
                  "epoch " + std::to_string(epoch) + ": validation loss " + format_double(val_loss));
    }
    result.curve.points.push_back({epoch, train_loss, val_loss});
    CheckpointMeta meta = result.meta;
    meta.epoch = static_cast<int64_t>(epoch);
    meta.val_loss = val_loss;
    save_checkpoint(params, meta, epoch_file(run_dir, epoch));
    write_file(run_dir / "curve.csv", result.curve.to_csv());
    if (result.curve.best_epoch() == epoch) {
      result.best_params = quantize_to_f32(params);
      result.meta = meta;
    }
    if (cfg.keep_checkpoints > 0) {
      const auto ranked = ranked_epochs(result.curve);
      for (size_t i = cfg.keep_checkpoints; i < ranked.size(); ++i) {
        std::filesystem::remove(epoch_file(run_dir, ranked[i]));
      }
    }
    if (log) {
      char line[128];
      std::snprintf(line, sizeof line, "[%s] epoch %zu/%zu train %.4f val %.4f\n",
                    std::string(plan_slug(plan)).c_str(), epoch, cfg.epochs, train_loss, val_loss);
      *log << line << std::flush;
    }
  }

  result.best_epoch = result.curve.best_epoch();
  std::filesystem::copy_file(epoch_file(run_dir, result.best_epoch), run_dir / "best.ckpt",
                             std::filesystem::copy_options::overwrite_existing);
  write_file(run_dir / "best.txt", std::to_string(result.best_epoch) + "\n");
  return result;
}

EvalOutput evaluate_dataset(const ModelParams& params, const Alphabet& alphabet,
                            const Dataset& data, const NGramLM* lm, const DecodeParams& decode,
                            bool greedy, double relu_cap) {
  const auto& utts = data.utterances;
  ForwardOptions options;
  options.relu_cap = relu_cap;
  EvalOutput out;
  out.refs.resize(utts.size());
  out.hyps.resize(utts.size());
  parallel_for(utts.size(), [&](size_t i) {
    Rng unused(0);
    const auto fwd = forward(params, utts[i].features, options, unused);
    const auto result =
        greedy ? greedy_decode(fwd.logprobs, alphabet) : beam_decode(fwd.logprobs, lm, decode, alphabet);
    out.refs[i] = utts[i].transcript;
    out.hyps[i] = utf8_encode(result.text);
  });
  out.report = score_corpus(out.refs, out.hyps);
  return out;
}

EvalOutput evaluate(const Checkpoint& ckpt, const std::filesystem::path& manifest,
                    const NGramLM* lm, const DecodeParams& decode,
                    const NormalizeOptions& normalize) {
  Manifest rows;
  try {
    rows = parse_manifest(manifest, ckpt.meta.alphabet);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidTranscriptChar) throw;
    throw Error(ErrorCode::AlphabetMismatch,
                std::string("checkpoint alphabet cannot spell the manifest: ") + e.what());
  }
  const Dataset data = load_dataset(rows, ckpt.meta.features);
  auto out = evaluate_dataset(ckpt.params, ckpt.meta.alphabet, data, lm, decode);
  if (normalize.lowercase || normalize.strip_punctuation) {
    out.report = score_corpus(out.refs, out.hyps, normalize);
  }
  return out;
}

std::string report_row(std::string_view method, const EvalReport& report) {
  char buf[64];
  std::snprintf(buf, sizeof buf, ",%.4f,%.4f", report.wer, report.cer);
  return csv_field(method) + buf;
}

std::string SuiteReport::results_csv() const {
  std::string out = "method,wer,cer\n";
  for (const auto& row : rows) {
    EvalReport r;
    r.wer = row.wer;
    r.cer = row.cer;
    out += report_row(method_name(row.plan), r) + "\n";
  }
  return out;
}

SuiteReport run_suite(const TrainConfig& cfg, const std::filesystem::path& source_checkpoint,
                      std::ostream* log) {
  cfg.validate();
  const Checkpoint source = load_checkpoint(source_checkpoint);
  const Alphabet alphabet = Alphabet::load(cfg.alphabet);
  if (source.meta.alphabet == alphabet) {
    throw Error(ErrorCode::AlphabetMismatch,
                "source checkpoint must be trained on a different alphabet than the target");
  }
  const Dataset test_data = load_split(cfg.test_manifest, alphabet, cfg.features);
  std::optional<NGramLM> lm;
  if (!cfg.lm.empty()) lm = read_arpa(cfg.lm);

  const auto& out_dir = cfg.out_dir;
  std::filesystem::create_directories(out_dir / "curves");
  write_file(out_dir / "config.txt", to_config_text(cfg));

  SuiteReport report;
  for (FreezePlan plan : kAllPlans) {
    std::optional<Checkpoint> init;
    if (uses_source_weights(plan)) init = source;
    const auto run = train(cfg, plan, init, out_dir / plan_slug(plan), log);
    const auto eval = evaluate_dataset(run.best_params, alphabet, test_data, lm ? &*lm : nullptr,
                                       cfg.decode, false, cfg.relu_cap);
    std::filesystem::copy_file(run.run_dir / "curve.csv",
                               out_dir / "curves" / (std::string(plan_slug(plan)) + ".csv"),
                               std::filesystem::copy_options::overwrite_existing);
    report.rows.push_back({plan, eval.report.wer, eval.report.cer, run.best_epoch,
                           run.trainable_params});
    if (log) {
      *log << report_row(method_name(plan), eval.report) << " (best epoch " << run.best_epoch
           << ")\n";
    }
  }

  std::string counts = "method,trainable_params\n";
  for (const auto& row : report.rows) {
    counts += csv_field(method_name(row.plan)) + "," + std::to_string(row.trainable_params) + "\n";
  }
  for (size_t i = 2; i < report.rows.size(); ++i) {
    if (report.rows[i].trainable_params >= report.rows[i - 1].trainable_params) {
      throw Error(ErrorCode::InvalidArgument, "trainable parameter counts must shrink F0 to F4");
    }
  }
  write_file(out_dir / "trainable_params.csv", counts);
  write_file(out_dir / "results.csv", report.results_csv());
  return report;
}

}  // namespace asrz
