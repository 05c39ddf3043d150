// SPDX-License-Identifier: Apache-2.0
#include "asrz/checkpoint.hpp"

#include <bit>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "asrz/error.hpp"

namespace asrz {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string(size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }
  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::MalformedCheckpoint, "unexpected end of checkpoint data");
    }
  }

  const std::string& bytes_;
  size_t pos_ = 0;
};

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string metadata_text(const ModelParams& params, const CheckpointMeta& meta) {
  const auto& d = params.dims;
  const auto& f = meta.features;
  std::string s;
  s += "input_width=" + std::to_string(d.input_width) + "\n";
  s += "hidden=" + std::to_string(d.hidden) + "\n";
  s += "n_labels=" + std::to_string(d.n_labels) + "\n";
  s += "alphabet=" + meta.alphabet.utf8() + "\n";
  s += "window_ms=" + format_double(f.window_ms) + "\n";
  s += "hop_ms=" + format_double(f.hop_ms) + "\n";
  s += "n_mel_filters=" + std::to_string(f.n_mel_filters) + "\n";
  s += "n_cepstra=" + std::to_string(f.n_cepstra) + "\n";
  s += "preemphasis=" + format_double(f.preemphasis) + "\n";
  s += "context_radius=" + std::to_string(f.context_radius) + "\n";
  s += "epoch=" + std::to_string(meta.epoch) + "\n";
  s += "val_loss=" + format_double(meta.val_loss) + "\n";
  return s;
}

std::map<std::string, std::string> parse_metadata(const std::string& text) {
  std::map<std::string, std::string> kv;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::MalformedCheckpoint, "metadata line without '=': " + line);
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    throw Error(ErrorCode::MalformedCheckpoint, "metadata key '" + key + "' missing");
  }
  return it->second;
}

double to_double(const std::string& s, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error(ErrorCode::MalformedCheckpoint, "bad number for '" + key + "': " + s);
  }
  return v;
}

int64_t to_int(const std::string& s, const std::string& key) {
  try {
    size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedCheckpoint, "bad integer for '" + key + "': " + s);
  }
}

void put_tensor(std::string& out, const std::string& name, const Matrix& m, bool as_vector) {
  put<uint16_t>(out, static_cast<uint16_t>(name.size()));
  out += name;
  if (as_vector) {
    put<uint8_t>(out, 1);
    put<uint64_t>(out, m.cols());
  } else {
    put<uint8_t>(out, 2);
    put<uint64_t>(out, m.rows());
    put<uint64_t>(out, m.cols());
  }
  for (double v : m.values()) put<float>(out, static_cast<float>(v));
}

}  // namespace

std::string serialize_checkpoint(const ModelParams& params, const CheckpointMeta& meta) {
  params.check_shapes();
  if (meta.alphabet.n_labels() != params.dims.n_labels) {
    throw Error(ErrorCode::ShapeMismatch, "alphabet size disagrees with n_labels");
  }
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put<uint32_t>(out, kCheckpointVersion);
  const std::string meta_text = metadata_text(params, meta);
  put<uint32_t>(out, static_cast<uint32_t>(meta_text.size()));
  out += meta_text;
  for (int k = 1; k <= kNumLayers; ++k) {
    put_tensor(out, tensor_name(k, false), params.layer(k).weight, false);
    put_tensor(out, tensor_name(k, true), params.layer(k).bias, true);
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "not an ASRZ checkpoint");
  }
  Reader in(bytes);
  in.get_string(4);
  const auto version = in.get<uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::UnsupportedVersion,
                "checkpoint version " + std::to_string(version));
  }
  const auto meta_len = in.get<uint32_t>();
  const auto kv = parse_metadata(in.get_string(meta_len));

  Checkpoint ckpt;
  ModelDims dims;
  dims.input_width = static_cast<size_t>(to_int(require(kv, "input_width"), "input_width"));
  dims.hidden = static_cast<size_t>(to_int(require(kv, "hidden"), "hidden"));
  dims.n_labels = static_cast<size_t>(to_int(require(kv, "n_labels"), "n_labels"));
  ckpt.meta.alphabet = Alphabet::from_utf8(require(kv, "alphabet"));
  if (ckpt.meta.alphabet.n_labels() != dims.n_labels) {
    throw Error(ErrorCode::ShapeMismatch, "alphabet size disagrees with n_labels");
  }
  auto& f = ckpt.meta.features;
  f.window_ms = to_double(require(kv, "window_ms"), "window_ms");
  f.hop_ms = to_double(require(kv, "hop_ms"), "hop_ms");
  f.n_mel_filters = static_cast<int>(to_int(require(kv, "n_mel_filters"), "n_mel_filters"));
  f.n_cepstra = static_cast<int>(to_int(require(kv, "n_cepstra"), "n_cepstra"));
  f.preemphasis = to_double(require(kv, "preemphasis"), "preemphasis");
  f.context_radius = static_cast<int>(to_int(require(kv, "context_radius"), "context_radius"));
  ckpt.meta.epoch = to_int(require(kv, "epoch"), "epoch");
  ckpt.meta.val_loss = to_double(require(kv, "val_loss"), "val_loss");

  ckpt.params = ModelParams::zeros(dims);
  std::map<std::string, Matrix*> slots;
  for (int k = 1; k <= kNumLayers; ++k) {
    slots[tensor_name(k, false)] = &ckpt.params.layer(k).weight;
    slots[tensor_name(k, true)] = &ckpt.params.layer(k).bias;
  }
  while (!in.done()) {
    const auto name_len = in.get<uint16_t>();
    const std::string name = in.get_string(name_len);
    const auto rank = in.get<uint8_t>();
    if (rank < 1 || rank > 2) {
      throw Error(ErrorCode::MalformedCheckpoint, "tensor " + name + " has rank " +
                                                      std::to_string(rank));
    }
    std::vector<uint64_t> shape(rank);
    for (auto& d : shape) d = in.get<uint64_t>();
    auto slot = slots.find(name);
    if (slot == slots.end()) {
      throw Error(ErrorCode::MalformedCheckpoint, "unknown tensor " + name);
    }
    Matrix& target = *slot->second;
    const uint64_t rows = rank == 1 ? 1 : shape[0];
    const uint64_t cols = shape.back();
    const bool is_bias = name.ends_with(".bias");
    if (rows != target.rows() || cols != target.cols() || (rank == 1) != is_bias) {
      throw Error(ErrorCode::ShapeMismatch, "tensor " + name + " shape disagrees with dims");
    }
    if (in.remaining() / sizeof(float) < rows * cols) {
      throw Error(ErrorCode::MalformedCheckpoint, "tensor " + name + " payload truncated");
    }
    for (double& v : target.values()) v = static_cast<double>(in.get<float>());
    slots.erase(slot);
  }
  if (!slots.empty()) {
    throw Error(ErrorCode::MalformedCheckpoint, "tensor " + slots.begin()->first + " missing");
  }
  return ckpt;
}

void save_checkpoint(const ModelParams& params, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(params, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

ModelParams quantize_to_f32(const ModelParams& params) {
  ModelParams q = params;
  for (auto& l : q.layers) {
    for (double& v : l.weight.values()) v = static_cast<double>(static_cast<float>(v));
    for (double& v : l.bias.values()) v = static_cast<double>(static_cast<float>(v));
  }
  return q;
}

ModelParams remap_output_layer(const ModelParams& params, const Alphabet& target, Rng& rng) {
  params.check_shapes();
  ModelParams out = params;
  out.dims.n_labels = target.n_labels();
  auto& head = out.layer(kOutputLayer);
  head.weight = Matrix(params.dims.hidden, out.dims.n_labels);
  head.bias = Matrix(1, out.dims.n_labels);
  glorot_uniform(head.weight, rng);
  return out;
}

}  // namespace asrz
